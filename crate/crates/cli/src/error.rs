use thiserror::Error;

/// Failures of a CLI run, each mapped to its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration, or parameters the models reject.
    #[error("configuration error: {0}")]
    Config(String),

    /// A computation that was set up correctly but failed numerically.
    #[error("numeric failure: {0}")]
    Numeric(tracelab_core::Error),

    #[error("cannot write output: {0}")]
    Output(String),

    /// The run completed but some of its checks failed.
    #[error("checks failed: {0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Output(_) | CliError::ChecksFailed(_) => 3,
        }
    }
}

impl From<tracelab_core::Error> for CliError {
    fn from(e: tracelab_core::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}
