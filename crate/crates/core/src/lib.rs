//! Path-ensemble advantage estimation: order statistics over k-step advantage
//! estimates, mixed into actor-critic training, plus exact tabular tools for
//! checking the estimators on small MDPs.

pub mod advantage;
pub mod agent;
pub mod env;
pub mod error;
pub mod nn;
pub mod tabular;

pub use advantage::{EstimatorConfig, PathEnsemble, Statistic};
pub use agent::{Algorithm, LearningCurve, TrainConfig};
pub use env::{Environment, MdpSpec, StepRecord, TabularEnv, Trajectory};
pub use error::{Error, Result};
