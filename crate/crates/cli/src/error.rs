use std::path::Path;

use thiserror::Error;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    /// Bad input: schema violations, invalid configuration, manifest mismatch.
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { context: path.display().to_string(), source }
    }
}

impl From<lcop_core::Error> for CliError {
    fn from(e: lcop_core::Error) -> Self {
        match e {
            lcop_core::Error::Numerical(msg) => CliError::Numerical(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}
