use std::path::PathBuf;

use dendrite_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or invalid configuration; `key` is the dotted key path.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("config syntax error: {0}")]
    Syntax(String),

    #[error(transparent)]
    Numerical(CoreError),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("malformed checkpoint {}: {reason}", path.display())]
    Checkpoint { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 4 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Syntax(_) => 2,
            Error::Numerical(CoreError::InvalidParameter { .. })
            | Error::Numerical(CoreError::ModelMismatch(_)) => 2,
            Error::Numerical(_) => 3,
            Error::Io { .. } | Error::CheckpointVersion { .. } | Error::Checkpoint { .. } => 4,
        }
    }
}

impl From<CoreError> for Error {
    fn from(e: CoreError) -> Self {
        Error::Numerical(e)
    }
}
