use std::path::PathBuf;

use thiserror::Error;

/// Harness failures, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Parse { .. } | HarnessError::Data(_) | HarnessError::Io { .. } => 3,
            HarnessError::Numerical(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        HarnessError::Parse { path: path.into(), line, message: message.into() }
    }
}

impl From<sqd_core::Error> for HarnessError {
    fn from(e: sqd_core::Error) -> Self {
        use sqd_core::Error as E;
        match e {
            E::Diverged { .. } | E::NonFinitePotential(_) | E::SingularLaplacian { .. } => {
                HarnessError::Numerical(e.to_string())
            }
            E::InvalidTemperature(_) => HarnessError::Config(e.to_string()),
            other => HarnessError::Data(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
