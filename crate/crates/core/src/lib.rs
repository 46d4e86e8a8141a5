//! Functional generalized linear models: simulation, spectral slope
//! estimation, and numerical diagnostics for the underlying perturbation and
//! concentration inequalities.

pub mod datagen;
pub mod error;
pub mod estimator;
pub mod expfam;
pub mod fpca;
pub mod funcspace;
pub mod harness;
pub mod linalg;
pub mod lowerbound;
pub mod seed;
pub mod spectral_diag;

pub use error::{FglmError, Result};
