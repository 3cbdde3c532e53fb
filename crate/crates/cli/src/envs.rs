//! Named environments available to configs.

use pathens_core::env::{self, CliffConfig, MdpSpec, TabularEnv};

use crate::config::EnvSection;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy)]
pub struct EnvInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// Accepted `[env]` parameters.
    pub params: &'static [&'static str],
    /// Small enough for exact policy iteration.
    pub tabular: bool,
}

pub const ENVS: &[EnvInfo] = &[
    EnvInfo {
        name: "maze",
        description: "open grid, start bottom-left, reward 1 on reaching the top-right goal",
        params: &["width", "height", "horizon"],
        tabular: false,
    },
    EnvInfo {
        name: "cliff",
        description: "cliff walk with action noise; falling costs cliff_penalty and ends the episode",
        params: &["length", "height", "horizon", "cliff_penalty", "step_reward", "action_noise"],
        tabular: true,
    },
    EnvInfo {
        name: "fig1a",
        description: "two-step chain where the max statistic finds the optimal policy in one improvement",
        params: &["horizon"],
        tabular: true,
    },
    EnvInfo {
        name: "fig1b",
        description: "risky branch where the max statistic prefers the worse action",
        params: &["horizon"],
        tabular: true,
    },
    EnvInfo {
        name: "fig1c",
        description: "zero-mean reward noise of size noise_scale; the max statistic overestimates",
        params: &["horizon", "noise_scale"],
        tabular: true,
    },
];

pub fn info(name: &str) -> Option<&'static EnvInfo> {
    ENVS.iter().find(|e| e.name == name)
}

/// Checks the name exists and only accepted parameters are set.
pub fn check_section(section: &EnvSection) -> Result<()> {
    let names: Vec<&str> = ENVS.iter().map(|e| e.name).collect();
    let info = info(&section.name).ok_or_else(|| {
        HarnessError::Config(format!("env.name: unknown environment `{}` (known: {})", section.name, names.join(", ")))
    })?;
    if let Some(p) = section.set_params().into_iter().find(|p| !info.params.contains(p)) {
        return Err(HarnessError::Config(format!("env.{p}: not a parameter of `{}`", info.name)));
    }
    build(section).map(|_| ()).map_err(|e| match e {
        HarnessError::Runtime(msg) => HarnessError::Config(format!("env: {msg}")),
        other => other,
    })
}

const FIXTURE_HORIZON: usize = 10;

fn fixture_mdp(section: &EnvSection) -> Result<Option<MdpSpec>> {
    Ok(match section.name.as_str() {
        "fig1a" => Some(env::make_fig1a()),
        "fig1b" => Some(env::make_fig1b()),
        "fig1c" => Some(env::make_fig1c(section.noise_scale.unwrap_or(1.0))?),
        _ => None,
    })
}

fn cliff_config(section: &EnvSection) -> CliffConfig {
    let d = CliffConfig::default();
    CliffConfig {
        length: section.length.unwrap_or(d.length),
        height: section.height.unwrap_or(d.height),
        cliff_penalty: section.cliff_penalty.unwrap_or(d.cliff_penalty),
        step_reward: section.step_reward.unwrap_or(d.step_reward),
        action_noise: section.action_noise.unwrap_or(d.action_noise),
        horizon: section.horizon.unwrap_or(d.horizon),
        gamma: d.gamma,
    }
}

/// Builds the environment described by `section`.
pub fn build(section: &EnvSection) -> Result<TabularEnv> {
    if let Some(mdp) = fixture_mdp(section)? {
        return Ok(TabularEnv::new(section.name.clone(), mdp, section.horizon.unwrap_or(FIXTURE_HORIZON)));
    }
    match section.name.as_str() {
        "maze" => Ok(env::make_sparse_maze(
            section.width.unwrap_or(9),
            section.height.unwrap_or(9),
            section.horizon.unwrap_or(100),
        )?),
        "cliff" => Ok(env::make_cliff_with(cliff_config(section))?),
        other => Err(HarnessError::Config(format!("env.name: unknown environment `{other}`"))),
    }
}

/// The exact MDP behind `section`.
pub fn build_mdp(section: &EnvSection) -> Result<MdpSpec> {
    Ok(build(section)?.mdp().clone())
}
