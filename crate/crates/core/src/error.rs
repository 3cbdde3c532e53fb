use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("episode already finished; call reset before stepping again")]
    EpisodeFinished,

    #[error("action {action} out of range (environment has {n_actions} actions)")]
    ActionOutOfRange { action: usize, n_actions: usize },

    #[error("enumeration exceeded node budget of {budget}")]
    BudgetExceeded { budget: usize },

    #[error("policy is improper under gamma = 1: state {state} never reaches a terminal state")]
    ImproperPolicy { state: usize },

    #[error("k = {k} out of range for timestep {t} (trajectory length {len})")]
    StepOutOfRange { t: usize, k: usize, len: usize },

    #[error("empty path ensemble")]
    EmptyEnsemble,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("stale activation cache (network parameters changed since forward pass)")]
    StaleCache,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
