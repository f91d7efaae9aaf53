use thiserror::Error;

/// Errors raised by the numeric kernels and the campaign runner.
#[derive(Debug, Error)]
pub enum Error {
    /// The phase value does not carry enough bits for the requested use.
    #[error("insufficient precision: {0}")]
    Precision(String),

    /// Parameters are individually valid but do not form a well-posed problem
    /// (for example `P >= Q`).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A value lies outside the range an operation is defined on.
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Work or memory estimate exceeds the configured budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A witness fell outside all three arc conditions. Indicates a bug.
    #[error("classification failed: {0}")]
    Classification(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
