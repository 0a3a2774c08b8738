use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration, located by a JSON path.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error(transparent)]
    Core(#[from] gaitlab::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Re-root a robot-document error under `prefix` (which replaces the
    /// leading `$`).
    pub fn from_core_at(e: gaitlab::Error, prefix: &str) -> Self {
        match e {
            gaitlab::Error::Spec { path, message } => CliError::Config {
                path: format!("{prefix}{}", path.strip_prefix('$').unwrap_or(&path)),
                message,
            },
            other => CliError::config(prefix, other.to_string()),
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Csv { .. } => 2,
            CliError::Core(gaitlab::Error::InvalidInput(_) | gaitlab::Error::Spec { .. }) => 2,
            _ => 1,
        }
    }
}
