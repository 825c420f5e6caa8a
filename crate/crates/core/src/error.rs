use thiserror::Error;

pub type Result<T> = std::result::Result<T, FggmError>;

#[derive(Debug, Error)]
pub enum FggmError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty observation domain: {0}")]
    EmptyDomain(String),

    #[error("grid point {grid_index} of variable {variable} is never observed")]
    UndefinedPoint { variable: usize, grid_index: usize },

    #[error("zero pointwise variance for variable {variable} at grid index {grid_index}")]
    DegenerateVariance { variable: usize, grid_index: usize },

    #[error("kernel is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigenvalue spectrum is identically zero")]
    DegenerateSpectrum,

    #[error("ridge factorization failed at alpha = {alpha:e} (condition estimate {condition:e})")]
    Factorization { alpha: f64, condition: f64 },

    #[error("no completely observed curves available for alpha selection")]
    NoCompleteCurves,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("ADMM stopped after {iterations} iterations (primal residual {primal:e}, dual residual {dual:e})")]
    NonConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FggmError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        FggmError::Dimension(msg.into())
    }
}
