use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// A malformed or invalid instance; `field` is a dotted path into the file.
    #[error("{field}: {message}")]
    Parse { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Algorithm(#[from] weakdr::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Algorithm(_) | CliError::Failed(_) => 1,
        }
    }

    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
