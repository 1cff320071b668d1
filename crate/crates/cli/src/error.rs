use std::path::PathBuf;

use thiserror::Error;

use crate::snapshot::SnapshotError;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for configuration and argument errors.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for solver failures.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code for file system and format errors.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] pflow::Error),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => EXIT_VALIDATION,
            CliError::Numerical(e) => match e {
                pflow::Error::InvalidGrid(_)
                | pflow::Error::InvalidExponent(_)
                | pflow::Error::InvalidParameter(_)
                | pflow::Error::InvalidRegime(_) => EXIT_VALIDATION,
                _ => EXIT_NUMERICAL,
            },
            CliError::CheckFailed(_) => EXIT_NUMERICAL,
            CliError::Snapshot(SnapshotError::ShapeMismatch(_)) => EXIT_VALIDATION,
            CliError::Snapshot(_) | CliError::Io { .. } => EXIT_IO,
        }
    }
}
