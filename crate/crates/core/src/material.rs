//! Plane-strain linear elasticity.

use nalgebra::Matrix2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub youngs: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl Material {
    pub fn plane_strain(youngs: f64, poisson: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_engineering(youngs, poisson)?;
        Ok(Self { youngs, poisson, lambda, mu })
    }

    /// `P = lambda tr(eps) I + 2 mu eps` with `eps = sym(F) - I`.
    pub fn stress(&self, f: &Matrix2<f64>) -> Matrix2<f64> {
        first_pk_stress(&small_strain(f), self)
    }
}

/// Plane-strain Lamé parameters from Young's modulus and Poisson's ratio.
pub fn lame_from_engineering(youngs: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(youngs > 0.0) {
        return Err(Error::InvalidArgument(format!("Young's modulus must be positive, got {youngs}")));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "Poisson's ratio must lie in (-1, 0.5), got {poisson}"
        )));
    }
    let lambda = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = youngs / (2.0 * (1.0 + poisson));
    Ok((lambda, mu))
}

pub fn small_strain(f: &Matrix2<f64>) -> Matrix2<f64> {
    (f + f.transpose()) * 0.5 - Matrix2::identity()
}

pub fn first_pk_stress(eps: &Matrix2<f64>, material: &Material) -> Matrix2<f64> {
    Matrix2::identity() * (material.lambda * eps.trace()) + eps * (2.0 * material.mu)
}
