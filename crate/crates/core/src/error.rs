use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular linear system in {context} (condition number {condition:.3e})")]
    Singular { context: String, condition: f64 },

    #[error("incompatible boundary data: Fredholm residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    Incompatible { residual: f64, tolerance: f64 },

    #[error("boundary value problem has a {dimension}-dimensional solution family and no normalization was supplied")]
    NonUnique { dimension: usize },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("regime mismatch: expected {expected}, found {found}")]
    RegimeMismatch { expected: String, found: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("function is not square integrable: {0}")]
    NotIntegrable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
