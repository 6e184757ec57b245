use thiserror::Error;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for invalid arguments, configurations or data values.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code for unreadable, unwritable or malformed files.
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] camokit_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("malformed JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    /// A check ran to completion and did not pass; its report was written.
    #[error("{0}")]
    CheckFailed(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io_or_format() => EXIT_IO,
            CliError::Json { source, .. } if !source.is_data() => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

/// I/O error annotated with the path involved.
pub fn io_at(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Core(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}
