use thiserror::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable paths or arguments outside a command's contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// The input data cannot support the requested analysis.
    #[error("data error: {0}")]
    Data(String),
    /// The computation broke down numerically.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) | CliError::Numerical(_) => 2,
        }
    }
}

impl From<coint_core::Error> for CliError {
    fn from(e: coint_core::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
