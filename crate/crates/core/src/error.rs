use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration or reference-data file failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical stage failed; `stage` names the pipeline step.
    #[error("numerical failure in {stage}: {message}")]
    Numeric { stage: &'static str, message: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numeric(stage: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric {
            stage,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } | Error::InvalidArgument(_) => 2,
            Error::Numeric { .. } => 3,
            Error::Calibration(_) => 4,
        }
    }
}
