//! Error taxonomy shared across the library.
//!
//! Variants map onto the process exit codes used by the CLI:
//! configuration problems (2), data problems (3), numeric failures (4).

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration (precondition violated).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Dataset is malformed or inconsistent with the requested operation.
    #[error("data error: {0}")]
    Data(String),

    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parse or encode failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON parse or encode failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Library-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for an `Invalid` error from any displayable message.
    pub fn invalid(msg: impl std::fmt::Display) -> Self {
        Error::Invalid(msg.to_string())
    }

    /// Shorthand for a `Data` error from any displayable message.
    pub fn data(msg: impl std::fmt::Display) -> Self {
        Error::Data(msg.to_string())
    }

    /// Shorthand for a `Numeric` error from any displayable message.
    pub fn numeric(msg: impl std::fmt::Display) -> Self {
        Error::Numeric(msg.to_string())
    }
}
