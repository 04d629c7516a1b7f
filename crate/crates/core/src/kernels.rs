//! Influence functions weighting bonds inside the horizon.

use crate::error::{Error, Result};

/// Which radial weighting to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceKind {
    CubicBspline,
    InverseSquare,
}

/// An influence function bound to a horizon, evaluated in the metric of the
/// family graph (physical or parametric).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceFunction {
    pub kind: InfluenceKind,
    pub delta: f64,
}

impl InfluenceFunction {
    pub fn new(kind: InfluenceKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {delta}")));
        }
        Ok(Self { kind, delta })
    }

    /// Weight of a bond whose length (in the family metric) is `dist`.
    pub fn weight(&self, dist: f64) -> Result<f64> {
        match self.kind {
            InfluenceKind::CubicBspline => cubic_bspline(dist / self.delta),
            InfluenceKind::InverseSquare => {
                if !(dist > 0.0) {
                    return Err(Error::InvalidArgument("zero-length bond".into()));
                }
                Ok(1.0 / (dist * dist))
            }
        }
    }
}

/// Cubic B-spline on the normalized distance `xi_hat = |xi| / delta`.
pub fn cubic_bspline(xi_hat: f64) -> Result<f64> {
    if xi_hat < 0.0 || xi_hat.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "normalized distance must be non-negative, got {xi_hat}"
        )));
    }
    let w = if xi_hat <= 0.5 {
        2.0 / 3.0 - 4.0 * xi_hat * xi_hat + 4.0 * xi_hat.powi(3)
    } else if xi_hat <= 1.0 {
        4.0 / 3.0 - 4.0 * xi_hat + 4.0 * xi_hat * xi_hat - 4.0 / 3.0 * xi_hat.powi(3)
    } else {
        0.0
    };
    Ok(w)
}

/// `1 / |xi|^2` for a non-zero bond vector.
pub fn inverse_square(xi: &[f64]) -> Result<f64> {
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    if !(r2 > 0.0) {
        return Err(Error::InvalidArgument("zero-length bond".into()));
    }
    Ok(1.0 / r2)
}
