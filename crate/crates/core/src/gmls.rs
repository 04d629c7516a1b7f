//! GMLS quadrature weights for the non-local gradient.
//!
//! Each bond carries a diagonal weight `omega_IJ`. The weights minimise
//! `sum_J omega_IJ : omega_IJ` subject to the discrete gradient
//! `sum_J (u_J - u_I) xi^T omega_IJ / |xi|^2` reproducing the gradients of
//! all monomials of degree `1..=n` at the node, in a frame centred on it.
//! Because constraint component `b` only involves the `b`-th diagonal
//! entries, the problem splits into one minimum-norm solve per dimension,
//! done here through a truncated SVD of the constraint block.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;

use crate::basis::{basis_size, MonomialBasis};
use crate::error::{Error, Result};
use crate::pointcloud::{FamilyGraph, PointCloud, Role};
use crate::rk::kinematic_nodes;

/// Singular values below this fraction of the largest are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;
/// Largest accepted constraint residual.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-10;

/// Minimum number of bonds for polynomial unisolvency of order `n` in `d`
/// dimensions.
pub fn unisolvency_bound(order: usize, dim: usize) -> usize {
    basis_size(order, dim)
}

#[derive(Debug, Clone)]
pub struct GmlsLocal {
    /// Diagonal of `omega_IJ` per bond.
    pub omega: Vec<DVector<f64>>,
    /// Largest constraint violation over all dimensions.
    pub residual: f64,
    pub constraints: usize,
}

/// Constraint matrix for dimension `b` on scaled bonds: row `k`, column `J`
/// is `q_k(xi_J) xi_J[b] / |xi_J|^2`.
pub fn constraint_matrix(basis: &MonomialBasis, scaled_bonds: &[DVector<f64>], b: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(basis.size(), scaled_bonds.len());
    for (col, xi) in scaled_bonds.iter().enumerate() {
        let q = basis.eval(xi.as_slice());
        let f = xi[b] / xi.norm_squared();
        for (row, qk) in q.iter().enumerate() {
            a[(row, col)] = qk * f;
        }
    }
    a
}

/// Bond vectors divided by the longest bond; `omega` is invariant to this.
pub fn scaled_bonds(bonds: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let s = bonds.iter().map(|b| b.norm()).fold(0.0, f64::max);
    bonds.iter().map(|b| b / s).collect()
}

pub fn gmls_local_weights(
    node: usize,
    basis: &MonomialBasis,
    bonds: &[DVector<f64>],
) -> Result<GmlsLocal> {
    let m = basis.size();
    let d = basis.dim();
    let n = bonds.len();
    if n < m {
        return Err(Error::Unisolvency { node, have: n, need: m, order: basis.order() });
    }
    let xs = scaled_bonds(bonds);
    let selector = basis.gradient_selector();
    let mut omega = vec![DVector::zeros(d); n];
    let mut residual: f64 = 0.0;

    for b in 0..d {
        let a = constraint_matrix(basis, &xs, b);
        let target = selector.column(b).into_owned();
        let svd = a.clone().svd(true, true);
        let max_sv = svd.singular_values.max();
        if !(max_sv > 0.0) {
            return Err(Error::DegenerateNeighborhood {
                node,
                detail: format!("no bond constrains component {b}"),
            });
        }
        // Minimum-norm solution; rows that vanish identically are fine as
        // long as the right-hand side vanishes there too, which the
        // residual check below catches.
        let solve = |rhs: &DVector<f64>| {
            svd.solve(rhs, PIVOT_TOLERANCE * max_sv).map_err(|e| Error::DegenerateNeighborhood {
                node,
                detail: format!("constraint solve failed for component {b}: {e}"),
            })
        };
        let mut w = solve(&target)?;
        for _ in 0..2 {
            let r = &target - &a * &w;
            if r.amax() <= 0.01 * CONSTRAINT_TOLERANCE {
                break;
            }
            w += solve(&r)?;
        }
        let r = (&a * &w - &target).amax();
        residual = residual.max(r);
        for (j, wj) in w.iter().enumerate() {
            omega[j][b] = *wj;
        }
    }
    if !(residual <= CONSTRAINT_TOLERANCE) {
        return Err(Error::DegenerateNeighborhood {
            node,
            detail: format!("constraint residual {residual:.2e} above {CONSTRAINT_TOLERANCE:.0e}"),
        });
    }
    Ok(GmlsLocal { omega, residual, constraints: d * m })
}

/// GMLS weights over a whole cloud; layout mirrors [`crate::rk::RkWeights`].
#[derive(Debug, Clone)]
pub struct GmlsWeights {
    pub order: usize,
    pub kinematic: Vec<Option<Vec<Vector2<f64>>>>,
    pub force: Vec<Option<Vec<Vector2<f64>>>>,
    /// Worst constraint residual per node (0 where no weights were built).
    pub kkt_residual: Vec<f64>,
}

fn node_weights(
    cloud: &PointCloud,
    basis: &MonomialBasis,
    i: usize,
    neighbors: &[usize],
) -> Result<(Vec<Vector2<f64>>, f64)> {
    let xi_i = cloud.position(i);
    let bonds: Vec<DVector<f64>> = neighbors
        .iter()
        .map(|&j| {
            let xi = cloud.position(j) - xi_i;
            DVector::from_column_slice(xi.as_slice())
        })
        .collect();
    let local = gmls_local_weights(i, basis, &bonds)?;
    Ok((
        local.omega.iter().map(|w| Vector2::new(w[0], w[1])).collect(),
        local.residual,
    ))
}

impl GmlsWeights {
    pub fn build(cloud: &PointCloud, families: &FamilyGraph, order: usize) -> Result<Self> {
        let basis = MonomialBasis::new(order, 2)?;
        let needed = kinematic_nodes(cloud, families);

        let kin: Vec<Option<(Vec<Vector2<f64>>, f64)>> = (0..cloud.len())
            .into_par_iter()
            .map(|i| {
                if !needed[i] {
                    return Ok(None);
                }
                node_weights(cloud, &basis, i, &families.kinematic[i]).map(Some)
            })
            .collect::<Result<_>>()?;
        let force: Vec<Option<(Vec<Vector2<f64>>, f64)>> = (0..cloud.len())
            .into_par_iter()
            .map(|i| {
                if cloud.role(i) != Role::Bulk {
                    return Ok(None);
                }
                if families.force[i].len() == families.kinematic[i].len() {
                    return Ok(kin[i].clone());
                }
                node_weights(cloud, &basis, i, &families.force[i]).map(Some)
            })
            .collect::<Result<_>>()?;

        let kkt_residual = kin
            .iter()
            .zip(&force)
            .map(|(k, f)| {
                let rk = k.as_ref().map_or(0.0, |(_, r)| *r);
                let rf = f.as_ref().map_or(0.0, |(_, r)| *r);
                rk.max(rf)
            })
            .collect();
        Ok(Self {
            order,
            kinematic: kin.into_iter().map(|k| k.map(|(w, _)| w)).collect(),
            force: force.into_iter().map(|f| f.map(|(w, _)| w)).collect(),
            kkt_residual,
        })
    }

    /// `sum_J (u_J - u_I) xi^T omega_IJ / |xi|^2` over the kinematic family.
    pub fn gradient(
        &self,
        cloud: &PointCloud,
        families: &FamilyGraph,
        i: usize,
        u: &[Vector2<f64>],
    ) -> Matrix2<f64> {
        let omega = self.kinematic[i].as_ref().expect("kinematic weights for node");
        let xi_i = cloud.position(i);
        let mut g = Matrix2::zeros();
        for (&j, w) in families.kinematic[i].iter().zip(omega) {
            let xi = cloud.position(j) - xi_i;
            let row = w.component_mul(&xi) / xi.norm_squared();
            g += (u[j] - u[i]) * row.transpose();
        }
        g
    }

    /// `sum_J (P_J - P_I) omega_IJ xi / |xi|^2` over the force family.
    pub fn divergence(
        &self,
        cloud: &PointCloud,
        families: &FamilyGraph,
        i: usize,
        stress: &[Matrix2<f64>],
    ) -> Vector2<f64> {
        let omega = self.force[i].as_ref().expect("force weights for node");
        let xi_i = cloud.position(i);
        let mut div = Vector2::zeros();
        for (&j, w) in families.force[i].iter().zip(omega) {
            let xi = cloud.position(j) - xi_i;
            div += (stress[j] - stress[i]) * (w.component_mul(&xi) / xi.norm_squared());
        }
        div
    }
}

pub fn gmls_gradient(
    weights: &GmlsWeights,
    cloud: &PointCloud,
    families: &FamilyGraph,
    u: &[Vector2<f64>],
    i: usize,
) -> Matrix2<f64> {
    weights.gradient(cloud, families, i, u)
}

pub fn gmls_divergence(
    weights: &GmlsWeights,
    cloud: &PointCloud,
    families: &FamilyGraph,
    stress: &[Matrix2<f64>],
    i: usize,
) -> Vector2<f64> {
    weights.divergence(cloud, families, i, stress)
}
