use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated the documented precondition of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not available for the given function model.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A sampler or solver detected a pathological configuration at run time.
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    /// Malformed input data (CSV, JSON descriptors).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
