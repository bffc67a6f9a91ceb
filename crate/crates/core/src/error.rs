use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("Gram matrix is singular (rank {rank} < {n_feat}) and strict mode is enabled")]
    SingularGram { rank: usize, n_feat: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "numeric solver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    DidNotConverge { iterations: usize, residual: f64 },
    #[error(
        "quadrature failed to reach tolerance {tolerance:.1e} (estimated error {estimate:.3e})"
    )]
    QuadratureFailure { tolerance: f64, estimate: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error("degenerate quadratic fit: only {0} distinct points in window")]
    DegenerateFit(usize),
    #[error("insufficient data: {n_obs} rows for {folds} folds")]
    InsufficientData { n_obs: usize, folds: usize },
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("target column `{0}` not found")]
    MissingTarget(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
