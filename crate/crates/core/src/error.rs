use thiserror::Error;

/// Errors produced by the library and the command-line harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid cone dimensions p={p}, q={q} (need p >= 2 and q >= 1)")]
    InvalidDims { p: usize, q: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("sub-solver failed: {0}")]
    SubSolver(String),

    #[error("closed-form denominator vanishes ({0:e})")]
    DegenerateDenominator(f64),

    #[error("disturbance norm must be positive, got {0}")]
    NonPositiveDisturbance(f64),

    #[error("every disturbance vector is zero")]
    AllDisturbancesZero,

    #[error("theta_1 vanishes, the degenerate case is undefined")]
    ZeroTheta,

    #[error("empty returns panel")]
    EmptyPanel,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
