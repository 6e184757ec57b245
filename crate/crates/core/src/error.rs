use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Two operands disagree on shape.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Data violates a value constraint (e.g. probability outside [0, 1]).
    #[error("validation failed: {0}")]
    Validation(String),
    /// A file is malformed or truncated.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by files or the filesystem rather than by values.
    pub fn is_io_or_format(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Format(_))
    }
}
