use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::advantage::EstimatorConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    A2c,
    Ppo,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::A2c => "a2c",
            Algorithm::Ppo => "ppo",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a2c" => Ok(Algorithm::A2c),
            "ppo" => Ok(Algorithm::Ppo),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub estimator: EstimatorConfig,
    pub rollout_length: usize,
    pub minibatches: usize,
    /// Passes over each batch; A2C always makes a single pass.
    pub epochs: usize,
    pub clip_epsilon: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    /// Global gradient-norm clip per network; 0 disables clipping.
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub updates: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ppo,
            estimator: EstimatorConfig { index_set: vec![1, 16, 64, 512], ..EstimatorConfig::default() },
            rollout_length: 512,
            minibatches: 4,
            epochs: 4,
            clip_epsilon: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 3e-4,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            updates: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.rollout_length < 2 {
            return bad("rollout_length must be at least 2");
        }
        if self.minibatches == 0 || self.minibatches > self.rollout_length {
            return bad("minibatches must lie in 1..=rollout_length");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.algorithm == Algorithm::Ppo && self.clip_epsilon.partial_cmp(&0.0) != Some(Ordering::Greater) {
            return bad("clip_epsilon must be positive for ppo");
        }
        if self.learning_rate.partial_cmp(&0.0) != Some(Ordering::Greater) {
            return bad("learning_rate must be positive");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 || self.max_grad_norm < 0.0 {
            return bad("coefficients must be non-negative");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }
}
