use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    #[error("no convergence after {iterations} iterations: {what}")]
    NotConverged { what: String, iterations: usize },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error("state space too large: {states} configurations exceeds limit {limit}")]
    StateSpaceTooLarge { states: f64, limit: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
