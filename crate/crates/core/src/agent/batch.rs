use rand::RngCore;

use crate::advantage::{estimate_trajectory, normalize_in_place, AdvantageOutput};
use crate::agent::TrainConfig;
use crate::env::{Environment, StepRecord, Trajectory};
use crate::error::Result;
use crate::nn::{log_softmax, DenseNet};

/// One timestep ready for a policy update.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: usize,
    pub action: usize,
    pub features: Vec<f64>,
    /// `log pi_old(action | state)` at collection time.
    pub behavior_log_prob: f64,
    pub estimate: AdvantageOutput,
    /// Advantage fed to the policy loss: the mixed advantage, normalized if configured.
    pub advantage: f64,
}

/// A rollout split into trajectories, with one [`Sample`] per timestep in
/// trajectory order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub trajectories: Vec<Trajectory>,
    pub samples: Vec<Sample>,
    /// Returns of the episodes that finished during this rollout.
    pub episode_returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Rescales `advantage` to zero mean and unit population deviation
    /// (deviation floored at 1e-8). Batches with fewer than two samples pass through.
    pub fn normalize_advantages(&mut self) {
        let mut adv: Vec<f64> = self.samples.iter().map(|s| s.advantage).collect();
        normalize_in_place(&mut adv);
        self.samples.iter_mut().zip(adv).for_each(|(s, a)| s.advantage = a);
    }

    pub fn fraction_biased(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| s.estimate.used_biased).count() as f64 / self.samples.len() as f64
    }
}

/// Independent random streams of one run.
#[derive(Debug, Clone)]
pub struct RunRngs {
    pub env: rand_chacha::ChaCha8Rng,
    pub action: rand_chacha::ChaCha8Rng,
    pub mix: rand_chacha::ChaCha8Rng,
    pub shuffle: rand_chacha::ChaCha8Rng,
}

impl RunRngs {
    /// Stream 0 of `seed` is reserved for parameter initialization.
    pub fn new(seed: u64) -> Self {
        Self { env: stream(seed, 1), action: stream(seed, 2), mix: stream(seed, 3), shuffle: stream(seed, 4) }
    }
}

pub(crate) fn stream(seed: u64, id: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Episode in progress across rollout boundaries.
#[derive(Debug, Clone, Default)]
pub struct RolloutState {
    state: Option<usize>,
    episode_return: f64,
}

/// `V(s)` for every state from the value network; terminal states are pinned to 0.
pub fn value_table(env: &dyn Environment, value_net: &DenseNet) -> Result<Vec<f64>> {
    (0..env.n_states())
        .map(|s| if env.is_terminal(s) { Ok(0.0) } else { Ok(value_net.forward(env.encoding().features(s))?.0[0]) })
        .collect()
}

/// Rolls out `cfg.rollout_length` steps, resetting finished episodes, and
/// computes every per-timestep estimate. An episode still running at the end
/// of the rollout becomes a truncated trajectory and continues in the next call.
pub fn collect_batch(
    env: &mut dyn Environment,
    rollout: &mut RolloutState,
    policy: &DenseNet,
    values: &[f64],
    cfg: &TrainConfig,
    rngs: &mut RunRngs,
) -> Result<Batch> {
    let mut batch = Batch::default();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut log_probs: Vec<f64> = Vec::with_capacity(cfg.rollout_length);
    let mut trajectories = Vec::new();

    let mut state = match rollout.state {
        Some(s) => s,
        None => {
            rollout.episode_return = 0.0;
            env.reset(&mut rngs.env)
        }
    };
    for _ in 0..cfg.rollout_length {
        let logits = policy.forward(env.encoding().features(state))?.0;
        let logp = log_softmax(&logits);
        let action = sample_from_log_probs(&logp, &mut rngs.action);
        let out = env.step(action, &mut rngs.env)?;
        log_probs.push(logp[action]);
        steps.push(StepRecord { state, action, reward: out.reward, next_state: out.next_state, done: out.done() });
        rollout.episode_return += out.reward;
        if out.done() {
            let piece = std::mem::take(&mut steps);
            trajectories.push(if out.terminal { Trajectory::terminal(piece)? } else { Trajectory::truncated(piece)? });
            batch.episode_returns.push(rollout.episode_return);
            rollout.episode_return = 0.0;
            state = env.reset(&mut rngs.env);
        } else {
            state = out.next_state;
        }
    }
    if !steps.is_empty() {
        trajectories.push(Trajectory::truncated(steps)?);
    }
    rollout.state = Some(state);

    let mut cursor = 0;
    for traj in &trajectories {
        let estimates = estimate_trajectory(traj, values, &cfg.estimator, &mut rngs.mix)?;
        for (step, estimate) in traj.steps.iter().zip(estimates) {
            batch.samples.push(Sample {
                state: step.state,
                action: step.action,
                features: env.encoding().features(step.state).to_vec(),
                behavior_log_prob: log_probs[cursor],
                advantage: estimate.mixed_advantage,
                estimate,
            });
            cursor += 1;
        }
    }
    batch.trajectories = trajectories;
    if cfg.estimator.normalize {
        batch.normalize_advantages();
    }
    Ok(batch)
}

fn sample_from_log_probs(logp: &[f64], rng: &mut dyn RngCore) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, l) in logp.iter().enumerate() {
        acc += l.exp();
        if u < acc {
            return a;
        }
    }
    logp.len() - 1
}
