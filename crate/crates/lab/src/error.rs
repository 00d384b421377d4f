use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Numerical(#[from] noiseshape::Error),
}

impl LabError {
    /// Process exit status for the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Numerical(noiseshape::Error::InvalidParameter(_))
            | LabError::Numerical(noiseshape::Error::NotDivisible { .. })
            | LabError::Config(_)
            | LabError::Io { .. }
            | LabError::Format(_) => 2,
            LabError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub type LabResult<T> = Result<T, LabError>;

pub(crate) fn config(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}
