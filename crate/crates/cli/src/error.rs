use std::process::ExitCode;

use stripe_mirror::{AnalysisError, CsvError, DynamicsError, EnsembleError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("analysis window error: {0}")]
    Window(#[from] AnalysisError),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("invalid input file: {0}")]
    Input(#[from] CsvError),
    #[error("validation failed: {0} check(s) did not pass")]
    Validation(usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Window(_) => 3,
            CliError::Integration(_) => 4,
            CliError::Input(_) | CliError::Validation(_) | CliError::Io(_) | CliError::Other(_) => 1,
        })
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidInput(_) | DynamicsError::InvalidSpecies(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Integration(other.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::InvalidSpec(m) => CliError::Config(m),
            EnsembleError::Atom { .. } => CliError::Integration(e.to_string()),
            EnsembleError::OutOfRange { .. } | EnsembleError::ThreadPool(_) => {
                CliError::Other(e.to_string())
            }
        }
    }
}
