//! Config-driven experiment harness: seed runs, statistic x bias-ratio sweeps,
//! paired comparisons, estimator dumps and offline verification of summaries.

pub mod compare;
pub mod config;
pub mod diagnose;
pub mod envs;
pub mod error;
pub mod records;
pub mod run;
pub mod stats;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use run::{run, sweep, RunOptions, RunOutput};
