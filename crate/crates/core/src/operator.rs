//! Unified bond weights `gamma_IJ` shared by the RK and GMLS schemes.
//!
//! Both non-local gradients take the form `sum_J (u_J - u_I) gamma_IJ^T`
//! and both divergences `sum_J (P_J - P_I) gamma_IJ`, with
//! `gamma_IJ = Phi_IJ V_J` for RK and `omega_IJ xi / |xi|^2` for GMLS.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::gmls::GmlsWeights;
use crate::kernels::InfluenceFunction;
use crate::pointcloud::{FamilyGraph, PointCloud};
use crate::rk::RkWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Rk,
    Gmls,
}

/// Discrete model: base or bond-associated divergence over either scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Rk,
    Gmls,
    BaRk,
    BaGmls,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [Formulation::Rk, Formulation::Gmls, Formulation::BaRk, Formulation::BaGmls];

    pub fn scheme(self) -> Scheme {
        match self {
            Formulation::Rk | Formulation::BaRk => Scheme::Rk,
            Formulation::Gmls | Formulation::BaGmls => Scheme::Gmls,
        }
    }

    pub fn is_bond_associated(self) -> bool {
        matches!(self, Formulation::BaRk | Formulation::BaGmls)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Rk => "rk",
            Formulation::Gmls => "gmls",
            Formulation::BaRk => "ba_rk",
            Formulation::BaGmls => "ba_gmls",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "rk" | "rk_pd" => Ok(Formulation::Rk),
            "gmls" | "gmls_pd" => Ok(Formulation::Gmls),
            "ba_rk" | "ba_rk_pd" => Ok(Formulation::BaRk),
            "ba_gmls" | "ba_gmls_pd" => Ok(Formulation::BaGmls),
            other => Err(Error::InvalidArgument(format!("unknown formulation {other:?}"))),
        }
    }
}

/// Scheme-specific weights kept for diagnostics and dumps.
#[derive(Debug, Clone)]
pub enum RawWeights {
    Rk(RkWeights),
    Gmls(GmlsWeights),
}

#[derive(Debug, Clone)]
pub struct GammaWeights {
    pub scheme: Scheme,
    pub order: usize,
    /// Parallel to `families.kinematic[i]`.
    pub kinematic: Vec<Option<Vec<Vector2<f64>>>>,
    /// Parallel to `families.force[i]`.
    pub force: Vec<Option<Vec<Vector2<f64>>>>,
    pub raw: RawWeights,
}

fn rk_gamma(
    cloud: &PointCloud,
    lists: &[Vec<usize>],
    phi: &[Option<Vec<Vector2<f64>>>],
) -> Vec<Option<Vec<Vector2<f64>>>> {
    phi.iter()
        .zip(lists)
        .map(|(p, fam)| {
            p.as_ref().map(|p| {
                fam.iter()
                    .zip(p)
                    .map(|(&j, phi)| phi * cloud.nodes[j].volume)
                    .collect()
            })
        })
        .collect()
}

fn gmls_gamma(
    cloud: &PointCloud,
    lists: &[Vec<usize>],
    omega: &[Option<Vec<Vector2<f64>>>],
) -> Vec<Option<Vec<Vector2<f64>>>> {
    omega
        .iter()
        .zip(lists)
        .enumerate()
        .map(|(i, (w, fam))| {
            w.as_ref().map(|w| {
                let xi_i = cloud.position(i);
                fam.iter()
                    .zip(w)
                    .map(|(&j, w)| {
                        let xi = cloud.position(j) - xi_i;
                        w.component_mul(&xi) / xi.norm_squared()
                    })
                    .collect()
            })
        })
        .collect()
}

impl GammaWeights {
    pub fn from_rk(cloud: &PointCloud, families: &FamilyGraph, rk: RkWeights) -> Self {
        Self {
            scheme: Scheme::Rk,
            order: rk.order,
            kinematic: rk_gamma(cloud, &families.kinematic, &rk.kinematic),
            force: rk_gamma(cloud, &families.force, &rk.force),
            raw: RawWeights::Rk(rk),
        }
    }

    pub fn from_gmls(cloud: &PointCloud, families: &FamilyGraph, gmls: GmlsWeights) -> Self {
        Self {
            scheme: Scheme::Gmls,
            order: gmls.order,
            kinematic: gmls_gamma(cloud, &families.kinematic, &gmls.kinematic),
            force: gmls_gamma(cloud, &families.force, &gmls.force),
            raw: RawWeights::Gmls(gmls),
        }
    }

    /// Builds the weights of `scheme`; `influence` is used by RK only, GMLS
    /// always folds `1 / |xi|^2` into its operator.
    pub fn build(
        cloud: &PointCloud,
        families: &FamilyGraph,
        scheme: Scheme,
        order: usize,
        influence: &InfluenceFunction,
    ) -> Result<Self> {
        Ok(match scheme {
            Scheme::Rk => Self::from_rk(cloud, families, RkWeights::build(cloud, families, order, influence)?),
            Scheme::Gmls => Self::from_gmls(cloud, families, GmlsWeights::build(cloud, families, order)?),
        })
    }

    pub fn has_kinematic(&self, i: usize) -> bool {
        self.kinematic[i].is_some()
    }

    /// Non-local displacement gradient at node `i`.
    pub fn gradient(&self, families: &FamilyGraph, i: usize, u: &[Vector2<f64>]) -> Matrix2<f64> {
        let gamma = self.kinematic[i].as_ref().expect("kinematic weights for node");
        let mut g = Matrix2::zeros();
        for (&j, w) in families.kinematic[i].iter().zip(gamma) {
            g += (u[j] - u[i]) * w.transpose();
        }
        g
    }

    /// Deformation gradients `I + grad u` wherever kinematic weights exist.
    pub fn deformation_gradients(&self, families: &FamilyGraph, u: &[Vector2<f64>]) -> Vec<Option<Matrix2<f64>>> {
        (0..u.len())
            .map(|i| {
                self.kinematic[i]
                    .as_ref()
                    .map(|_| Matrix2::identity() + self.gradient(families, i, u))
            })
            .collect()
    }
}
