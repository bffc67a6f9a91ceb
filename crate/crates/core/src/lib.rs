//! Schatten-norm bias-constrained linear regression.
//!
//! The crate covers the three estimators obtained by bounding the Schatten-p
//! norm of the bias operator (Nuclear, Ridge, Spectral), their exact
//! high-dimensional test error under random-matrix ensembles, and the
//! simulation and cross-validation harnesses used to compare them.

pub mod basin;
pub mod cv;
pub mod density;
pub mod ensembles;
pub mod error;
pub mod estimator;
pub mod io;
pub mod rff;
pub mod theory;

pub use error::{Error, Result};
pub use estimator::{
    alpha_to_bias_bound, bias_bound_to_alpha, filtered_gram_eigvals, fit, fit_with,
    operator_diagnostics, predict, BiasBound, FitOptions, FittedModel, GramSpectrum,
    LinearOperator, SchattenIndex, SpectralSolver,
};
