use thiserror::Error;

/// Errors produced by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input row. `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Input that parsed but violates a data invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A tuning parameter outside its allowed range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("week {week} is outside [1, {horizon}]")]
    OutOfRange { week: u32, horizon: u32 },

    /// The synthetic generator could not produce a non-empty basket.
    #[error("generation error: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub(crate) fn parameter(message: impl Into<String>) -> Self {
        Error::Parameter(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
