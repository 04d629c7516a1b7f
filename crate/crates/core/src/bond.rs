//! Bond-associated kinematics and the stabilized divergence.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::pointcloud::Point;

/// Non-homogeneous correction
/// `[x_J - x_I - (F_I + F_J)/2 (X_J - X_I)] (X_J - X_I)^T / |X_J - X_I|^2`.
pub fn nonuniform_correction(
    f_i: &Matrix2<f64>,
    f_j: &Matrix2<f64>,
    x_i: &Point,
    x_j: &Point,
    ref_i: &Point,
    ref_j: &Point,
) -> Result<Matrix2<f64>> {
    let xi = ref_j - ref_i;
    let len2 = xi.norm_squared();
    if !(len2 > 0.0) {
        return Err(Error::InvalidArgument("bond endpoints coincide in the reference configuration".into()));
    }
    let mismatch = (x_j - x_i) - (f_i + f_j) * 0.5 * xi;
    Ok(mismatch * xi.transpose() / len2)
}

/// Bond-level deformation gradient `F_JI = F_J + dF_JI`.
pub fn bond_deformation_gradient(
    f_i: &Matrix2<f64>,
    f_j: &Matrix2<f64>,
    x_i: &Point,
    x_j: &Point,
    ref_i: &Point,
    ref_j: &Point,
) -> Result<Matrix2<f64>> {
    Ok(f_j + nonuniform_correction(f_i, f_j, x_i, x_j, ref_i, ref_j)?)
}

/// `sum_J (P_JI - P_I) gamma_IJ`; pass a zero bond stress for broken bonds.
pub fn ba_divergence(
    stress_i: &Matrix2<f64>,
    bond_stresses: &[Matrix2<f64>],
    gamma: &[Vector2<f64>],
) -> Vector2<f64> {
    let mut div = Vector2::zeros();
    for (p_ji, g) in bond_stresses.iter().zip(gamma) {
        div += (p_ji - stress_i) * g;
    }
    div
}

/// `sum_J (P_J - P_I) gamma_IJ` with the neighbor's nodal stress.
pub fn base_divergence(
    stress_i: &Matrix2<f64>,
    neighbor_stresses: &[Matrix2<f64>],
    gamma: &[Vector2<f64>],
) -> Vector2<f64> {
    let mut div = Vector2::zeros();
    for (p_j, g) in neighbor_stresses.iter().zip(gamma) {
        div += (p_j - stress_i) * g;
    }
    div
}
