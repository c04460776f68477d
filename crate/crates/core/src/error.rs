use std::io;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The fluid-limit system cannot start because no vertex is infected at time zero.
    #[error("degenerate start: {0}")]
    DegenerateStart(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Json(_) => 2,
            Error::InvariantViolation(_) => 3,
            Error::NumericFailure(_) | Error::DegenerateStart(_) => 4,
            Error::Format(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
