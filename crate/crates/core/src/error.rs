use thiserror::Error;

/// Errors surfaced by targets, chains, estimators and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A gradient or potential evaluation produced NaN or infinity.
    #[error("numeric failure: non-finite values at coordinates {coords:?}")]
    NumericFailure { coords: Vec<usize> },

    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    /// All validation problems found in an experiment spec, not just the first.
    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
