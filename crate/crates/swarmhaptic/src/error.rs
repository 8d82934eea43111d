use std::path::PathBuf;

use thiserror::Error;

/// Failures of the file-level API. [`IoError::exit_code`] maps them onto
/// the command-line contract.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed file content. `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Well-formed but semantically invalid input.
    #[error("{}: {source}", path.display())]
    Invalid {
        path: PathBuf,
        source: swarmhaptic_core::Error,
    },

    #[error("{0}")]
    Simulation(swarmhaptic_core::Error),
}

impl IoError {
    pub fn exit_code(&self) -> u8 {
        match self {
            IoError::Simulation(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;
