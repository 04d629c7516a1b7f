//! Reproducing-kernel non-local gradient and divergence.
//!
//! Per node `I` the moment matrix `M_I = sum_J a_IJ Q_IJ Q_IJ^T V_J` is
//! assembled over the family and the per-bond weight vectors are
//! `Phi_IJ = a_IJ S^T M_I^{-1} Q_IJ`, where `S` selects the linear monomials.
//! Monomials are evaluated on `xi / s` with `s` the longest bond of the
//! family, which leaves `Phi` unchanged but keeps `M` well scaled.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;

use crate::basis::MonomialBasis;
use crate::error::{Error, Result};
use crate::kernels::InfluenceFunction;
use crate::pointcloud::{FamilyGraph, PointCloud, Role};

/// Moment matrices with a scaled condition number above this are rejected.
pub const MAX_MOMENT_CONDITION: f64 = 1e12;

/// Weights of a single node, for any spatial dimension.
#[derive(Debug, Clone)]
pub struct RkLocal {
    pub phi: Vec<DVector<f64>>,
    /// Condition number of the scaled moment matrix.
    pub condition: f64,
}

fn family_scale(bonds: &[DVector<f64>]) -> f64 {
    bonds.iter().map(|b| b.norm()).fold(0.0, f64::max)
}

fn scaled_moment(
    basis: &MonomialBasis,
    bonds: &[DVector<f64>],
    alphas: &[f64],
    volumes: &[f64],
    scale: f64,
) -> (DMatrix<f64>, Vec<DVector<f64>>) {
    let m = basis.size();
    let mut moment = DMatrix::zeros(m, m);
    let mut qs = Vec::with_capacity(bonds.len());
    for ((xi, &a), &v) in bonds.iter().zip(alphas).zip(volumes) {
        let scaled: Vec<f64> = xi.iter().map(|c| c / scale).collect();
        let q = DVector::from_vec(basis.eval(&scaled));
        moment.ger(a * v, &q, &q, 1.0);
        qs.push(q);
    }
    (moment, qs)
}

fn check_condition(node: usize, moment: &DMatrix<f64>) -> Result<f64> {
    let eig = SymmetricEigen::new(moment.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !(max / min <= MAX_MOMENT_CONDITION) {
        return Err(Error::DegenerateNeighborhood {
            node,
            detail: format!(
                "moment matrix eigenvalues in [{min:.3e}, {max:.3e}], condition limit {MAX_MOMENT_CONDITION:.0e}"
            ),
        });
    }
    Ok(max / min)
}

/// `M_I = sum_J a_J Q(xi_J) Q(xi_J)^T V_J` in physical units.
///
/// Fails when the neighborhood cannot support the basis (singular or
/// ill-conditioned after scaling).
pub fn assemble_moment_matrix(
    node: usize,
    basis: &MonomialBasis,
    bonds: &[DVector<f64>],
    alphas: &[f64],
    volumes: &[f64],
) -> Result<DMatrix<f64>> {
    if bonds.is_empty() {
        return Err(Error::DegenerateNeighborhood { node, detail: "empty family".into() });
    }
    let scale = family_scale(bonds);
    let (scaled, _) = scaled_moment(basis, bonds, alphas, volumes, scale);
    check_condition(node, &scaled)?;
    let (physical, _) = scaled_moment(basis, bonds, alphas, volumes, 1.0);
    Ok(physical)
}

/// `Phi_IJ` for one node from its bond vectors, influence values and
/// neighbor volumes.
pub fn rk_local_weights(
    node: usize,
    basis: &MonomialBasis,
    bonds: &[DVector<f64>],
    alphas: &[f64],
    volumes: &[f64],
) -> Result<RkLocal> {
    if bonds.is_empty() {
        return Err(Error::DegenerateNeighborhood { node, detail: "empty family".into() });
    }
    let scale = family_scale(bonds);
    let (moment, qs) = scaled_moment(basis, bonds, alphas, volumes, scale);
    let condition = check_condition(node, &moment)?;
    let chol = moment.cholesky().ok_or_else(|| Error::DegenerateNeighborhood {
        node,
        detail: "moment matrix is not positive definite".into(),
    })?;
    // W = M^{-1} S, so Phi_J = (a_J / s) W^T Q_J
    let w = chol.solve(&basis.gradient_selector());
    let phi = qs
        .iter()
        .zip(alphas)
        .map(|(q, &a)| w.tr_mul(q) * (a / scale))
        .collect();
    Ok(RkLocal { phi, condition })
}

/// RK weights over a whole cloud.
///
/// `kinematic[i]` is parallel to `families.kinematic[i]` and is present for
/// every node whose deformation gradient is needed (bulk nodes and their
/// non-free-surface neighbors). `force[i]` is parallel to
/// `families.force[i]` and present for bulk nodes.
#[derive(Debug, Clone)]
pub struct RkWeights {
    pub order: usize,
    pub kinematic: Vec<Option<Vec<Vector2<f64>>>>,
    pub force: Vec<Option<Vec<Vector2<f64>>>>,
    pub condition: Vec<f64>,
}

/// Nodes whose kinematic operator is required: bulk nodes and every
/// material neighbor that feeds their divergence.
pub(crate) fn kinematic_nodes(cloud: &PointCloud, families: &FamilyGraph) -> Vec<bool> {
    let mut needed = vec![false; cloud.len()];
    for i in 0..cloud.len() {
        if cloud.role(i) == Role::Bulk {
            needed[i] = true;
            for &j in &families.force[i] {
                if cloud.role(j) != Role::FreeSurface {
                    needed[j] = true;
                }
            }
        }
    }
    needed
}

fn node_weights(
    cloud: &PointCloud,
    families: &FamilyGraph,
    basis: &MonomialBasis,
    influence: &InfluenceFunction,
    i: usize,
    neighbors: &[usize],
) -> Result<(Vec<Vector2<f64>>, f64)> {
    let xi_i = cloud.position(i);
    let mut bonds = Vec::with_capacity(neighbors.len());
    let mut alphas = Vec::with_capacity(neighbors.len());
    let mut vols = Vec::with_capacity(neighbors.len());
    for &j in neighbors {
        let xi = cloud.position(j) - xi_i;
        bonds.push(DVector::from_column_slice(xi.as_slice()));
        alphas.push(influence.weight(families.metric_distance(cloud, i, j))?);
        vols.push(cloud.nodes[j].volume);
    }
    let local = rk_local_weights(i, basis, &bonds, &alphas, &vols)?;
    let phi = local.phi.iter().map(|p| Vector2::new(p[0], p[1])).collect();
    Ok((phi, local.condition))
}

impl RkWeights {
    pub fn build(
        cloud: &PointCloud,
        families: &FamilyGraph,
        order: usize,
        influence: &InfluenceFunction,
    ) -> Result<Self> {
        let basis = MonomialBasis::new(order, 2)?;
        let needed = kinematic_nodes(cloud, families);

        let kin: Vec<Option<(Vec<Vector2<f64>>, f64)>> = (0..cloud.len())
            .into_par_iter()
            .map(|i| {
                if !needed[i] {
                    return Ok(None);
                }
                node_weights(cloud, families, &basis, influence, i, &families.kinematic[i]).map(Some)
            })
            .collect::<Result<_>>()?;

        let force: Vec<Option<Vec<Vector2<f64>>>> = (0..cloud.len())
            .into_par_iter()
            .map(|i| {
                if cloud.role(i) != Role::Bulk {
                    return Ok(None);
                }
                if families.force[i].len() == families.kinematic[i].len() {
                    return Ok(kin[i].as_ref().map(|(phi, _)| phi.clone()));
                }
                node_weights(cloud, families, &basis, influence, i, &families.force[i])
                    .map(|(phi, _)| Some(phi))
            })
            .collect::<Result<_>>()?;

        let condition = kin.iter().map(|k| k.as_ref().map_or(0.0, |(_, c)| *c)).collect();
        Ok(Self {
            order,
            kinematic: kin.into_iter().map(|k| k.map(|(phi, _)| phi)).collect(),
            force,
            condition,
        })
    }

    /// `sum_J (u_J - u_I) Phi_IJ^T V_J` over the kinematic family.
    pub fn gradient(
        &self,
        cloud: &PointCloud,
        families: &FamilyGraph,
        i: usize,
        u: &[Vector2<f64>],
    ) -> Matrix2<f64> {
        let phi = self.kinematic[i].as_ref().expect("kinematic weights for node");
        let mut g = Matrix2::zeros();
        for (&j, p) in families.kinematic[i].iter().zip(phi) {
            g += (u[j] - u[i]) * (p * cloud.nodes[j].volume).transpose();
        }
        g
    }

    /// `sum_J (P_J - P_I) Phi_IJ V_J` over the force family; `stress` must
    /// be zero on free-surface nodes.
    pub fn divergence(
        &self,
        cloud: &PointCloud,
        families: &FamilyGraph,
        i: usize,
        stress: &[Matrix2<f64>],
    ) -> Vector2<f64> {
        let phi = self.force[i].as_ref().expect("force weights for node");
        let mut div = Vector2::zeros();
        for (&j, p) in families.force[i].iter().zip(phi) {
            div += (stress[j] - stress[i]) * (p * cloud.nodes[j].volume);
        }
        div
    }
}

/// Free-function form of [`RkWeights::gradient`].
pub fn rk_gradient(
    weights: &RkWeights,
    cloud: &PointCloud,
    families: &FamilyGraph,
    u: &[Vector2<f64>],
    i: usize,
) -> Matrix2<f64> {
    weights.gradient(cloud, families, i, u)
}

/// Free-function form of [`RkWeights::divergence`].
pub fn rk_divergence(
    weights: &RkWeights,
    cloud: &PointCloud,
    families: &FamilyGraph,
    stress: &[Matrix2<f64>],
    i: usize,
) -> Vector2<f64> {
    weights.divergence(cloud, families, i, stress)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::InfluenceKind;
    use crate::pointcloud::{build_families, generate_uniform_grid, MetricSpace, Point};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn single_neighbor_is_degenerate() {
        let basis = MonomialBasis::new(1, 2).unwrap();
        let err = rk_local_weights(7, &basis, &[dv(&[1.0, 0.0])], &[1.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateNeighborhood { node: 7, .. }));
        assert!(assemble_moment_matrix(7, &basis, &[dv(&[1.0, 0.0])], &[1.0], &[1.0]).is_err());
        assert!(assemble_moment_matrix(7, &basis, &[], &[], &[]).is_err());
    }

    #[test]
    fn cross_stencil_moment_matrix() {
        let (h, v) = (0.3, 0.09);
        let bonds = [dv(&[h, 0.0]), dv(&[-h, 0.0]), dv(&[0.0, h]), dv(&[0.0, -h])];
        let basis = MonomialBasis::new(1, 2).unwrap();
        let m = assemble_moment_matrix(0, &basis, &bonds, &[1.0; 4], &[v; 4]).unwrap();
        // sum of the four outer products xi xi^T V
        let mut oracle = DMatrix::<f64>::zeros(2, 2);
        for b in &bonds {
            oracle += b * b.transpose() * v;
        }
        assert!((m.clone() - oracle).norm() < 1e-15);
        assert!((m[(0, 0)] - 2.0 * h * h * v).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m.clone() - m.transpose(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn quadratic_moment_matrix_is_spd_on_grid() {
        let h = 0.1;
        let mut bonds = Vec::new();
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                let r = ((i * i + j * j) as f64).sqrt();
                if r > 0.0 && r <= 2.5 {
                    bonds.push(dv(&[i as f64 * h, j as f64 * h]));
                }
            }
        }
        let alphas: Vec<f64> = bonds
            .iter()
            .map(|b| crate::kernels::cubic_bspline(b.norm() / (2.5 * h)).unwrap())
            .collect();
        let basis = MonomialBasis::new(2, 2).unwrap();
        let m = assemble_moment_matrix(0, &basis, &bonds, &alphas, &vec![h * h; bonds.len()]).unwrap();
        let eig = SymmetricEigen::new(m);
        assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn colinear_row_in_one_dimension_kills_quadratic() {
        // Five uniform nodes on a line: as a 1-D neighborhood the quadratic
        // gradient of x^2 at the centre is exactly zero; embedded in 2-D the
        // y-monomials vanish and the moment matrix is singular.
        let h = 0.25;
        let bonds1: Vec<_> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| dv(&[k * h])).collect();
        let basis1 = MonomialBasis::new(2, 1).unwrap();
        let local = rk_local_weights(0, &basis1, &bonds1, &[1.0; 4], &[h; 4]).unwrap();
        let x0 = 0.0f64;
        let grad: f64 = bonds1
            .iter()
            .zip(&local.phi)
            .map(|(b, p)| ((x0 + b[0]).powi(2) - x0 * x0) * p[0] * h)
            .sum();
        assert!(grad.abs() < 1e-12);

        let bonds2: Vec<_> = bonds1.iter().map(|b| dv(&[b[0], 0.0])).collect();
        let basis2 = MonomialBasis::new(2, 2).unwrap();
        assert!(rk_local_weights(0, &basis2, &bonds2, &[1.0; 4], &[h; 4]).is_err());
    }

    #[test]
    fn linear_consistency_identity() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let bonds: Vec<_> = (0..14)
            .map(|k| {
                let t = k as f64 * 0.77;
                dv(&[(0.3 + 0.05 * k as f64) * t.cos(), (0.3 + 0.04 * k as f64) * t.sin()])
            })
            .collect();
        let vols: Vec<f64> = (0..14).map(|k| 0.01 + 0.001 * k as f64).collect();
        let local = rk_local_weights(0, &basis, &bonds, &[1.0; 14], &vols).unwrap();
        let mut id = DMatrix::<f64>::zeros(2, 2);
        for ((p, b), v) in local.phi.iter().zip(&bonds).zip(&vols) {
            id += p * b.transpose() * *v;
        }
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn scaling_positions_scales_weights_inversely() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let bonds: Vec<_> = (0..12)
            .map(|k| {
                let t = k as f64 * 0.53 + 0.1;
                dv(&[(0.5 + 0.03 * k as f64) * t.cos(), (0.5 - 0.02 * k as f64) * t.sin()])
            })
            .collect();
        let vols = vec![0.04; 12];
        let base = rk_local_weights(0, &basis, &bonds, &[1.0; 12], &vols).unwrap();
        let s = 3.0;
        let scaled_bonds: Vec<_> = bonds.iter().map(|b| b * s).collect();
        let scaled_vols: Vec<f64> = vols.iter().map(|v| v * s * s).collect();
        let scaled = rk_local_weights(0, &basis, &scaled_bonds, &[1.0; 12], &scaled_vols).unwrap();
        for k in 0..12 {
            let a = &base.phi[k] * vols[k] / s;
            let b = &scaled.phi[k] * scaled_vols[k];
            assert!((&a - &b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn cloud_gradient_of_quadratic_and_divergence_of_linear_stress() {
        let h = 0.1;
        let cloud = generate_uniform_grid(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), h, 0.35).unwrap();
        let fam = build_families(&cloud, 3.5 * h, MetricSpace::Physical).unwrap();
        let inf = InfluenceFunction::new(InfluenceKind::CubicBspline, 3.5 * h).unwrap();
        let w = RkWeights::build(&cloud, &fam, 2, &inf).unwrap();
        let u: Vec<_> = cloud.nodes.iter().map(|n| Vector2::new(n.position.x.powi(2), 0.0)).collect();
        let p: Vec<_> = cloud
            .nodes
            .iter()
            .map(|n| Matrix2::new(n.position.x, 0.0, 0.0, 0.0))
            .collect();
        let c: Vec<_> = cloud.nodes.iter().map(|_| Vector2::new(0.3, -0.2)).collect();
        for i in cloud.ids_with(Role::Bulk) {
            let x0 = cloud.position(i).x;
            let g = rk_gradient(&w, &cloud, &fam, &u, i);
            assert!((g - Matrix2::new(2.0 * x0, 0.0, 0.0, 0.0)).norm() < 1e-10);
            assert!(w.gradient(&cloud, &fam, i, &c).norm() < 1e-12);
            let d = rk_divergence(&w, &cloud, &fam, &p, i);
            assert!((d - Vector2::new(1.0, 0.0)).norm() < 1e-10);
        }
    }
}
