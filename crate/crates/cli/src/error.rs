use std::path::Path;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Divergence(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("comparison error: {0}")]
    Compare(String),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Compare(_) | CliError::Failed(_) => 1,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<suspopt::Error> for CliError {
    fn from(err: suspopt::Error) -> Self {
        use suspopt::Error as E;
        match err {
            E::Divergence { .. } => CliError::Divergence(err.to_string()),
            E::Optimizer(_) | E::FitFailure { .. } | E::InsufficientData(_) => {
                CliError::Failed(err.to_string())
            }
            _ => CliError::Config(err.to_string()),
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
