//! CLI error type and its mapping to process exit codes.

use thiserror::Error;

/// Failure of a CLI invocation.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or inputs rejected by the model.
    #[error("{0}")]
    Validation(String),

    /// A solver or integrator failed on valid inputs.
    #[error("{0}")]
    Numerical(String),

    /// Output could not be written.
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    /// Exit status: 1 for validation and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<dcf_mrp::Error> for CliError {
    fn from(e: dcf_mrp::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}
