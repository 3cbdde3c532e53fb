use thiserror::Error;

/// Harness failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("refusing to overwrite {0} (pass --force)")]
    Exists(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("{0}")]
    Mismatch(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 3,
            HarnessError::Io(_) | HarnessError::Exists(_) => 4,
            HarnessError::Runtime(_) => 5,
            HarnessError::Mismatch(_) => 6,
        }
    }
}

impl From<pathens_core::Error> for HarnessError {
    fn from(e: pathens_core::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
