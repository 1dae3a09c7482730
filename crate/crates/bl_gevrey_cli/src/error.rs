use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown suite {0:?}; expected one of dyadic, spaces, solver-mms, aux-residuals, monitors, all")]
    UnknownSuite(String),
    #[error(transparent)]
    Model(#[from] bl_gevrey::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn snapshot(path: &Path, reason: impl Into<String>) -> Self {
        Self::Snapshot {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    /// `2` for configuration problems, `1` for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownSuite(_) => 2,
            CliError::Model(bl_gevrey::Error::Config(_)) => 2,
            _ => 1,
        }
    }
}
