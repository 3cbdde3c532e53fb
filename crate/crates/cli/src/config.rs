//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[experiment]`, `[env]`,
//! `[train]`, `[estimator]` and the optional `[tabular]` and `[sweep]`. Unknown
//! keys are rejected. See `docs/config.md` for the full schema.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use pathens_core::advantage::{EstimatorConfig, Statistic};
use pathens_core::agent::{Algorithm, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs;
use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub env: EnvSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabular: Option<TabularSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Train,
    Tabular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    pub seeds: Vec<u64>,
    /// Output directory; `runs/<name>` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Curve rows averaged for the final mean return.
    #[serde(default = "default_final_window")]
    pub final_window: usize,
    /// Updates whose per-timestep estimator rows are stored.
    #[serde(default)]
    pub diagnose_updates: Vec<usize>,
}

fn default_final_window() -> usize {
    10
}

/// Environment name and its parameters. Parameters not listed fall back to the
/// environment's defaults; parameters the environment does not take are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliff_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
}

impl EnvSection {
    pub fn named(name: &str) -> Self {
        Self { name: name.to_string(), ..Self::default() }
    }

    /// Names of the parameters that are set.
    pub fn set_params(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut note = |set: bool, name| {
            if set {
                out.push(name)
            }
        };
        note(self.width.is_some(), "width");
        note(self.height.is_some(), "height");
        note(self.length.is_some(), "length");
        note(self.horizon.is_some(), "horizon");
        note(self.cliff_penalty.is_some(), "cliff_penalty");
        note(self.step_reward.is_some(), "step_reward");
        note(self.action_noise.is_some(), "action_noise");
        note(self.noise_scale.is_some(), "noise_scale");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub algorithm: String,
    pub updates: usize,
    pub rollout_length: usize,
    pub minibatches: usize,
    pub epochs: usize,
    pub clip_epsilon: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            algorithm: d.algorithm.to_string(),
            updates: d.updates,
            rollout_length: d.rollout_length,
            minibatches: d.minibatches,
            epochs: d.epochs,
            clip_epsilon: d.clip_epsilon,
            entropy_coef: d.entropy_coef,
            value_coef: d.value_coef,
            learning_rate: d.learning_rate,
            max_grad_norm: d.max_grad_norm,
            hidden: d.hidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    /// `gae` for the plain baseline, otherwise a statistic name.
    pub statistic: String,
    pub bias_ratio: f64,
    /// `[1, 16, 64, rollout_length]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_set: Option<Vec<usize>>,
    pub gamma: f64,
    pub lambda: f64,
    pub normalize: bool,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let d = EstimatorConfig::default();
        Self {
            statistic: "gae".into(),
            bias_ratio: d.bias_ratio,
            index_set: None,
            gamma: d.gamma,
            lambda: d.lambda,
            normalize: d.normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularSection {
    /// Evaluation rules to run policy iteration with; `gae` means exact Q.
    pub statistics: Vec<String>,
    /// Enumeration depth for statistic Q values.
    pub horizon: usize,
    pub max_iterations: usize,
}

impl Default for TabularSection {
    fn default() -> Self {
        Self { statistics: vec!["max".into(), "gae".into()], horizon: 50, max_iterations: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub statistics: Vec<String>,
    pub bias_ratios: Vec<f64>,
}

/// Parses a statistic name, with `gae` meaning none.
pub fn parse_statistic(name: &str) -> Result<Option<Statistic>, HarnessError> {
    if name.trim().eq_ignore_ascii_case("gae") {
        return Ok(None);
    }
    name.parse::<Statistic>().map(Some).map_err(|e| HarnessError::Config(format!("statistic `{name}`: {e}")))
}

pub fn statistic_label(statistic: Option<Statistic>) -> String {
    statistic.map_or_else(|| "gae".to_string(), |s| s.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the serialized config, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.experiment.out.clone().unwrap_or_else(|| Path::new("runs").join(&self.experiment.name))
    }

    pub fn statistic(&self) -> Result<Option<Statistic>, HarnessError> {
        parse_statistic(&self.estimator.statistic)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, msg: String| Err(HarnessError::Config(format!("{field}: {msg}")));
        if self.experiment.name.trim().is_empty() {
            return bad("experiment.name", "must not be empty".into());
        }
        if self.experiment.seeds.is_empty() {
            return bad("experiment.seeds", "must list at least one seed".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.experiment.seeds.iter().find(|s| !seen.insert(**s)) {
            return bad("experiment.seeds", format!("seed {dup} appears more than once"));
        }
        if self.experiment.final_window == 0 {
            return bad("experiment.final_window", "must be at least 1".into());
        }
        envs::check_section(&self.env)?;
        match self.experiment.mode {
            Mode::Tabular => {
                let tab = self.tabular.clone().unwrap_or_default();
                if tab.statistics.is_empty() {
                    return bad("tabular.statistics", "must not be empty".into());
                }
                for s in &tab.statistics {
                    parse_statistic(s)?;
                }
                if !envs::info(&self.env.name).is_some_and(|e| e.tabular) {
                    return bad("env.name", format!("`{}` has no tabular mode", self.env.name));
                }
                if self.sweep.is_some() {
                    return bad("sweep", "sweeps need mode = \"train\"".into());
                }
            }
            Mode::Train => {
                if self.tabular.is_some() {
                    return bad("tabular", "only used with mode = \"tabular\"".into());
                }
                if let Some(u) = self.experiment.diagnose_updates.iter().find(|u| **u >= self.train.updates) {
                    return bad("experiment.diagnose_updates", format!("update {u} is beyond train.updates"));
                }
                self.train_config(self.experiment.seeds[0])?
                    .validate()
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                if let Some(sweep) = &self.sweep {
                    if sweep.statistics.is_empty() || sweep.bias_ratios.is_empty() {
                        return bad("sweep", "statistics and bias_ratios must both be nonempty".into());
                    }
                    for s in &sweep.statistics {
                        parse_statistic(s)?;
                    }
                    if let Some(r) = sweep.bias_ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                        return bad("sweep.bias_ratios", format!("{r} is outside [0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn index_set(&self) -> Vec<usize> {
        self.estimator.index_set.clone().unwrap_or_else(|| {
            let mut ks = vec![1, 16, 64, self.train.rollout_length];
            ks.sort_unstable();
            ks.dedup();
            ks
        })
    }

    /// The trainer configuration for one seed.
    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, HarnessError> {
        let algorithm: Algorithm =
            self.train.algorithm.parse().map_err(|e| HarnessError::Config(format!("train.algorithm: {e}")))?;
        let t = &self.train;
        Ok(TrainConfig {
            algorithm,
            estimator: EstimatorConfig {
                statistic: self.statistic()?,
                index_set: self.index_set(),
                gamma: self.estimator.gamma,
                lambda: self.estimator.lambda,
                bias_ratio: self.estimator.bias_ratio,
                normalize: self.estimator.normalize,
            },
            rollout_length: t.rollout_length,
            minibatches: t.minibatches,
            epochs: t.epochs,
            clip_epsilon: t.clip_epsilon,
            entropy_coef: t.entropy_coef,
            value_coef: t.value_coef,
            learning_rate: t.learning_rate,
            max_grad_norm: t.max_grad_norm,
            hidden: t.hidden.clone(),
            updates: t.updates,
            seed,
        })
    }

    /// Copy of this config for one sweep cell.
    pub fn with_cell(&self, statistic: &str, bias_ratio: f64) -> Self {
        let mut cell = self.clone();
        cell.sweep = None;
        cell.estimator.statistic = statistic.to_string();
        cell.estimator.bias_ratio = bias_ratio;
        cell.experiment.name = format!("{}-{}", self.experiment.name, cell_name(statistic, bias_ratio));
        cell
    }
}

/// Directory-safe name of a sweep cell, e.g. `order2_rho0.3`.
pub fn cell_name(statistic: &str, bias_ratio: f64) -> String {
    let stat: String = statistic.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    format!("{stat}_rho{bias_ratio}")
}

/// Parses `--seeds`: either a half-open range `a..b` or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, HarnessError> {
    let err = || HarnessError::Config(format!("--seeds: expected `a..b` or `s1,s2,...`, got `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| err())?;
        let b: u64 = b.trim().parse().map_err(|_| err())?;
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse::<u64>().map_err(|_| err())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
name = "cliff-min"
seeds = [0, 1, 2]

[env]
name = "cliff"
action_noise = 0.1

[estimator]
statistic = "min"
bias_ratio = 0.3
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.train, TrainSection::default());
        assert_eq!(cfg.index_set(), vec![1, 16, 64, 512]);
        assert_eq!(cfg.statistic().unwrap(), Some(Statistic::Min));
        assert_eq!(cfg.out_dir(), PathBuf::from("runs/cliff-min"));
        assert_eq!(cfg.train_config(7).unwrap().seed, 7);
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let empty = MINIMAL.replace("seeds = [0, 1, 2]", "seeds = []");
        let msg = ExperimentConfig::from_toml_str(&empty).unwrap_err().to_string();
        assert!(msg.contains("experiment.seeds"), "{msg}");

        let dup = MINIMAL.replace("seeds = [0, 1, 2]", "seeds = [0, 1, 0]");
        assert!(ExperimentConfig::from_toml_str(&dup).is_err());

        let typo = MINIMAL.replace("bias_ratio", "bias_ration");
        let msg = ExperimentConfig::from_toml_str(&typo).unwrap_err().to_string();
        assert!(msg.contains("bias_ration") && msg.contains("line"), "{msg}");

        let foreign = MINIMAL.replace("action_noise = 0.1", "width = 9");
        let msg = ExperimentConfig::from_toml_str(&foreign).unwrap_err().to_string();
        assert!(msg.contains("width"), "{msg}");

        let unknown = MINIMAL.replace("name = \"cliff\"", "name = \"lava\"");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    }

    #[test]
    fn seeds_flag() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("5, 9,2").unwrap(), vec![5, 9, 2]);
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cell_names_are_path_safe() {
        assert_eq!(cell_name("order(2)", 0.3), "order2_rho0.3");
        assert_eq!(cell_name("maxabs", 0.1), "maxabs_rho0.1");
    }
}
