use thiserror::Error;

/// Errors shared across the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance too large: {0}")]
    SizeGuard(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsupported rule: {0}")]
    UnsupportedRule(String),

    #[error("schedule rejected: {0}")]
    ScheduleRejected(String),

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
