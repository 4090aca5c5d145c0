use thiserror::Error;

/// Errors produced by the toolkit. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// Post-selection never succeeds for the given input.
    #[error("degenerate outcome: {message} (probability {probability:e})")]
    Degenerate { message: String, probability: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::NumericalDomain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>, probability: f64) -> Self {
        Error::Degenerate {
            message: msg.into(),
            probability,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
