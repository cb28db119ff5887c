use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the commands. Each kind maps to its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Analysis(#[from] rancova::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { context: context.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use rancova::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Data { .. } => 3,
            Self::Analysis(e) => match e {
                E::NoComparablePoints => 4,
                E::CalibrationFailure { .. } => 5,
                E::InCondition { source, .. } if matches!(**source, E::CalibrationFailure { .. }) => 5,
                E::GroupTooSmallForComparability { .. } => 3,
                _ => 7,
            },
            Self::Io { .. } => 6,
            Self::Config { .. } => 8,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
