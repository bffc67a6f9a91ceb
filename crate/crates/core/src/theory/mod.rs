//! Random-matrix theory for the limiting test error.

pub mod appell;
pub mod curves;
pub mod mp;
pub mod quadrature;

pub use appell::{appell_f1, AppellF1Args};
pub use curves::{
    err_diagonal_quadrature, err_nuclear_closed, err_spectral_closed, err_spherical_quadrature,
    log_grid, oracle_ridge_alpha, ErrorModel, TheoryCurve, TheoryEnsemble,
};
pub use mp::MarchenkoPastur;
pub use quadrature::{QuadResult, Quadrature};
