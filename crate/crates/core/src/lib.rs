//! Meshfree strong-form peridynamic correspondence solver.
//!
//! Non-local gradient and divergence operators built from reproducing kernel
//! (RK) and generalized moving least squares (GMLS) weights, their
//! bond-associated variants, and a static plane-strain equilibrium solver.

pub mod basis;
pub mod bond;
pub mod error;
pub mod gmls;
pub mod kernels;
pub mod material;
pub mod operator;
pub mod pointcloud;
pub mod rk;
pub mod runner;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
