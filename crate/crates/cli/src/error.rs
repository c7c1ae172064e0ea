use mvc_core::MvcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    /// Inputs parsed but the geometry or the constraints were rejected.
    #[error("{context}: {source}")]
    Invalid { context: String, source: MvcError },
    /// A validation suite breached its tolerance; the report was written.
    #[error("validation failed: {0}")]
    Breach(String),
}

impl CliError {
    pub fn invalid(context: impl Into<String>) -> impl FnOnce(MvcError) -> CliError {
        let context = context.into();
        move |source| CliError::Invalid { context, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse { .. } => 1,
            CliError::Invalid { .. } | CliError::Breach(_) => 2,
        }
    }
}
