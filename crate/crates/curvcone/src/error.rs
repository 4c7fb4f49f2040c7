use thiserror::Error;

/// Errors produced by the curvature library.
#[derive(Error, Debug, Clone)]
pub enum CurvError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{check}: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    InvariantViolation {
        check: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("{0} is outside the valid domain")]
    Domain(String),

    #[error("hypothesis not satisfied: {what} (margin {margin:.6e})")]
    Hypothesis { what: String, margin: f64 },
}

pub type Result<T> = std::result::Result<T, CurvError>;

impl CurvError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CurvError::InvalidInput(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CurvError::Domain(msg.into())
    }
}
