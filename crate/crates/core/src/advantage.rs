//! k-step advantage estimators, path ensembles, truncated GAE and the
//! order-statistic family mixed in with a bias ratio.
//!
//! Conventions used throughout:
//! - positions `0..=T` index the states of a trajectory of `T` steps;
//! - the value at position `T` is `V(bootstrap_state)` for a truncated
//!   trajectory and `0` for one that ended at a terminal state;
//! - every function is pure in its inputs; randomness only enters through
//!   the explicit `rng` of [`mix`] and [`estimate_trajectory`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::env::Trajectory;
use crate::error::{Error, Result};

/// Source of state values `V(s)`.
pub trait StateValues {
    fn value(&self, state: usize) -> f64;
}

impl StateValues for [f64] {
    fn value(&self, state: usize) -> f64 {
        self[state]
    }
}

impl StateValues for Vec<f64> {
    fn value(&self, state: usize) -> f64 {
        self[state]
    }
}

/// Adapts a closure to [`StateValues`].
pub struct FnValues<F>(pub F);

impl<F: Fn(usize) -> f64> StateValues for FnValues<F> {
    fn value(&self, state: usize) -> f64 {
        (self.0)(state)
    }
}

/// Nonlinear selector applied to a path ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Max,
    Min,
    /// Element of largest absolute value.
    MaxAbs,
    /// d-th smallest element, 1-based; clamped to the ensemble size.
    Order(usize),
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Max => f.write_str("max"),
            Statistic::Min => f.write_str("min"),
            Statistic::MaxAbs => f.write_str("maxabs"),
            Statistic::Order(d) => write!(f, "order({d})"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "max" => Ok(Statistic::Max),
            "min" => Ok(Statistic::Min),
            "maxabs" | "max-abs" | "max_abs" => Ok(Statistic::MaxAbs),
            _ => {
                let d = s
                    .strip_prefix("order(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| s.strip_prefix("order"))
                    .and_then(|d| d.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown statistic `{s}`")))?;
                if d == 0 {
                    return Err(Error::InvalidArgument("order(d) requires d >= 1".into()));
                }
                Ok(Statistic::Order(d))
            }
        }
    }
}

/// Estimator settings. `statistic == None` means plain GAE.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub statistic: Option<Statistic>,
    pub index_set: Vec<usize>,
    pub gamma: f64,
    pub lambda: f64,
    pub bias_ratio: f64,
    pub normalize: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            statistic: None,
            index_set: vec![1, 16, 64, 2048],
            gamma: 0.99,
            lambda: 0.95,
            bias_ratio: 0.0,
            normalize: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.index_set.is_empty() {
            return bad("index_set must be nonempty");
        }
        if self.index_set[0] == 0 {
            return bad("index_set entries must be positive");
        }
        if self.index_set.windows(2).any(|w| w[0] >= w[1]) {
            return bad("index_set must be strictly increasing");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.bias_ratio) {
            return bad("bias_ratio must lie in [0, 1]");
        }
        if self.statistic == Some(Statistic::Order(0)) {
            return bad("order(d) requires d >= 1");
        }
        Ok(())
    }
}

/// The k-step estimators available at one timestep, sorted by `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    t: usize,
    entries: Vec<(usize, f64)>,
}

impl PathEnsemble {
    /// Builds an ensemble from `(k, value)` pairs; `k` must be strictly increasing.
    pub fn new(t: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument("ensemble k values must be strictly increasing".into()));
        }
        Ok(Self { t, entries })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn position_value(traj: &Trajectory, u: usize, values: &(impl StateValues + ?Sized)) -> f64 {
    if traj.bootstraps_at(u) {
        values.value(traj.state_at(u))
    } else {
        0.0
    }
}

/// `sum_{i<k} gamma^i r_{t+i} + gamma^k V(s_{t+k}) - V(s_t)`.
pub fn k_step_advantage(
    traj: &Trajectory,
    t: usize,
    k: usize,
    values: &(impl StateValues + ?Sized),
    gamma: f64,
) -> Result<f64> {
    let len = traj.len();
    if k == 0 || t >= len || k > len - t {
        return Err(Error::StepOutOfRange { t, k, len });
    }
    let mut discount = 1.0;
    let mut sum = 0.0;
    for step in &traj.steps[t..t + k] {
        sum += discount * step.reward;
        discount *= gamma;
    }
    Ok(sum + discount * position_value(traj, t + k, values) - position_value(traj, t, values))
}

/// Ensemble at `t` over `index_set`, with each `k` clamped to the remaining
/// length and duplicates removed.
pub fn build_ensemble(
    traj: &Trajectory,
    t: usize,
    index_set: &[usize],
    values: &(impl StateValues + ?Sized),
    gamma: f64,
) -> Result<PathEnsemble> {
    let remaining =
        traj.len().checked_sub(t).filter(|r| *r > 0).ok_or(Error::StepOutOfRange { t, k: 1, len: traj.len() })?;
    let mut ks: Vec<usize> = index_set.iter().map(|&k| k.clamp(1, remaining)).collect();
    ks.sort_unstable();
    ks.dedup();
    let entries = ks
        .into_iter()
        .map(|k| k_step_advantage(traj, t, k, values, gamma).map(|v| (k, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble { t, entries })
}

/// One-step TD residuals `r_u + gamma V(s_{u+1}) - V(s_u)` for every step.
pub fn td_residuals(traj: &Trajectory, values: &(impl StateValues + ?Sized), gamma: f64) -> Vec<f64> {
    (0..traj.len())
        .map(|u| traj.steps[u].reward + gamma * position_value(traj, u + 1, values) - position_value(traj, u, values))
        .collect()
}

/// Truncated GAE for every timestep of `traj`.
pub fn gae_all(traj: &Trajectory, values: &(impl StateValues + ?Sized), gamma: f64, lambda: f64) -> Vec<f64> {
    gae_suffix(&td_residuals(traj, values, gamma), 0, gamma * lambda)
}

fn gae_suffix(deltas: &[f64], from: usize, decay: f64) -> Vec<f64> {
    let mut out = vec![0.0; deltas.len() - from];
    let mut acc = 0.0;
    for u in (from..deltas.len()).rev() {
        acc = deltas[u] + decay * acc;
        out[u - from] = acc;
    }
    out
}

/// Truncated GAE at a single timestep: `sum_{l=0}^{T-t-1} (gamma lambda)^l delta_{t+l}`.
///
/// Evaluated with the same backward recursion as [`gae_all`], so the two agree bit for bit.
pub fn gae(traj: &Trajectory, t: usize, values: &(impl StateValues + ?Sized), gamma: f64, lambda: f64) -> Result<f64> {
    if t >= traj.len() {
        return Err(Error::StepOutOfRange { t, k: 1, len: traj.len() });
    }
    let deltas = td_residuals(traj, values, gamma);
    Ok(gae_suffix(&deltas, t, gamma * lambda)[0])
}

/// Selects from the ensemble; returns the chosen value and its `k`.
/// Ties go to the smallest `k`.
pub fn order_statistic(ensemble: &PathEnsemble, statistic: Statistic) -> Result<(f64, usize)> {
    select(&ensemble.entries, statistic)
}

pub(crate) fn select(entries: &[(usize, f64)], statistic: Statistic) -> Result<(f64, usize)> {
    let first = *entries.first().ok_or(Error::EmptyEnsemble)?;
    let pick_by = |better: &dyn Fn(f64, f64) -> bool| {
        entries.iter().skip(1).fold(first, |best, &e| if better(e.1, best.1) { e } else { best })
    };
    let (k, v) = match statistic {
        Statistic::Max => pick_by(&|a, b| a > b),
        Statistic::Min => pick_by(&|a, b| a < b),
        Statistic::MaxAbs => pick_by(&|a, b| a.abs() > b.abs()),
        Statistic::Order(d) => {
            let mut sorted = entries.to_vec();
            // stable: equal values keep ascending k
            sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
            sorted[d.clamp(1, sorted.len()) - 1]
        }
    };
    Ok((v, k))
}

/// Result of the bias-ratio draw at one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedAdvantage {
    pub baseline: f64,
    pub biased: f64,
    /// `k` of the selected estimator; 0 when no statistic is configured.
    pub chosen_k: usize,
    pub used_biased: bool,
    pub mixed: f64,
}

/// Draws one uniform from `rng` and substitutes the statistic for the GAE
/// value with probability `cfg.bias_ratio`. The draw happens even when the
/// ratio is 0 or no statistic is configured, so the random stream does not
/// depend on the configuration.
pub fn mix(
    ensemble: &PathEnsemble,
    gae_value: f64,
    cfg: &EstimatorConfig,
    rng: &mut dyn RngCore,
) -> Result<MixedAdvantage> {
    let u: f64 = rng.random();
    let used_biased = u < cfg.bias_ratio;
    let (biased, chosen_k) = match cfg.statistic {
        Some(stat) => order_statistic(ensemble, stat)?,
        None => (gae_value, 0),
    };
    let mixed = if used_biased { biased } else { gae_value };
    Ok(MixedAdvantage { baseline: gae_value, biased, chosen_k, used_biased, mixed })
}

/// Per-timestep estimator output, ready for a policy update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageOutput {
    pub ensemble: PathEnsemble,
    pub value: f64,
    pub baseline_advantage: f64,
    pub biased_advantage: f64,
    pub chosen_k: usize,
    pub used_biased: bool,
    pub mixed_advantage: f64,
    /// `value + baseline_advantage`; never touched by the statistic.
    pub critic_target: f64,
}

/// Value-network regression targets `V(s_t) + GAE_t`.
pub fn critic_targets(traj: &Trajectory, values: &(impl StateValues + ?Sized), gamma: f64, lambda: f64) -> Vec<f64> {
    gae_all(traj, values, gamma, lambda)
        .into_iter()
        .enumerate()
        .map(|(t, a)| position_value(traj, t, values) + a)
        .collect()
}

/// Runs the full estimator pipeline over one trajectory.
pub fn estimate_trajectory(
    traj: &Trajectory,
    values: &(impl StateValues + ?Sized),
    cfg: &EstimatorConfig,
    rng: &mut dyn RngCore,
) -> Result<Vec<AdvantageOutput>> {
    let baselines = gae_all(traj, values, cfg.gamma, cfg.lambda);
    let mut out = Vec::with_capacity(traj.len());
    for (t, &baseline) in baselines.iter().enumerate() {
        let ensemble = build_ensemble(traj, t, &cfg.index_set, values, cfg.gamma)?;
        let m = mix(&ensemble, baseline, cfg, rng)?;
        let value = position_value(traj, t, values);
        out.push(AdvantageOutput {
            ensemble,
            value,
            baseline_advantage: m.baseline,
            biased_advantage: m.biased,
            chosen_k: m.chosen_k,
            used_biased: m.used_biased,
            mixed_advantage: m.mixed,
            critic_target: value + m.baseline,
        });
    }
    Ok(out)
}

/// Shifts and scales to mean 0 and population standard deviation 1, with the
/// deviation floored at `1e-8`. Slices shorter than 2 are left alone.
pub fn normalize_in_place(xs: &mut [f64]) {
    if xs.len() < 2 {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt().max(1e-8);
    for x in xs.iter_mut() {
        *x = (*x - mean) / sd;
    }
}

/// Both sides of the identity relating two estimators in one ensemble:
/// `A^(j) - A^(i) = gamma^i (sum_{s<j-i} gamma^s r_{t+i+s} + gamma^{j-i} V(s_{t+j}) - V(s_{t+i}))`.
pub fn estimator_gap(
    traj: &Trajectory,
    t: usize,
    i: usize,
    j: usize,
    values: &(impl StateValues + ?Sized),
    gamma: f64,
) -> Result<(f64, f64)> {
    if i == 0 || i >= j {
        return Err(Error::InvalidArgument(format!("need 1 <= i < j, got i = {i}, j = {j}")));
    }
    let lhs = k_step_advantage(traj, t, j, values, gamma)? - k_step_advantage(traj, t, i, values, gamma)?;
    let mut bracket = 0.0;
    let mut discount = 1.0;
    for s in 0..j - i {
        bracket += discount * traj.steps[t + i + s].reward;
        discount *= gamma;
    }
    bracket += discount * position_value(traj, t + j, values) - position_value(traj, t + i, values);
    Ok((lhs, gamma.powi(i as i32) * bracket))
}
