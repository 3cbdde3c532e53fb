use rand::seq::SliceRandom;
use rand::RngCore;

use crate::agent::loss::{clip_grad_norm, policy_loss_and_grad, value_loss_and_grad, PolicyObjective};
use crate::agent::stream;
use crate::agent::{collect_batch, value_table, Algorithm, Batch, RolloutState, RunRngs, Sample, TrainConfig};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::nn::{Adam, DenseNet};

/// Averages over the gradient steps of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub policy_grad_norm: f64,
    pub value_grad_norm: f64,
    pub max_ratio_deviation: f64,
    pub gradient_steps: usize,
}

/// Policy and value networks with their optimizers.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub policy: DenseNet,
    pub value: DenseNet,
    pub policy_opt: Adam,
    pub value_opt: Adam,
}

impl ActorCritic {
    /// Policy output layer starts with gain 0.01 (near-uniform policy), value output with gain 1.
    pub fn new(
        input_dim: usize,
        n_actions: usize,
        hidden: &[usize],
        learning_rate: f64,
        rng: &mut dyn RngCore,
    ) -> Self {
        let sizes =
            |out: usize| std::iter::once(input_dim).chain(hidden.iter().copied()).chain([out]).collect::<Vec<_>>();
        let policy = DenseNet::init(&sizes(n_actions), 0.01, rng);
        let value = DenseNet::init(&sizes(1), 1.0, rng);
        let policy_opt = Adam::new(policy.n_params(), learning_rate);
        let value_opt = Adam::new(value.n_params(), learning_rate);
        Self { policy, value, policy_opt, value_opt }
    }

    /// One gradient step on each network. Nothing is applied if any loss or
    /// gradient entry is non-finite.
    fn minibatch_step(
        &mut self,
        samples: &[&Sample],
        objective: PolicyObjective,
        cfg: &TrainConfig,
        acc: &mut UpdateStats,
    ) -> Result<()> {
        let (pstats, mut pgrad) = policy_loss_and_grad(&self.policy, samples, objective, cfg.entropy_coef)?;
        let (vloss, mut vgrad) = value_loss_and_grad(&self.value, samples, cfg.value_coef)?;
        if !pstats.loss.is_finite() || pgrad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("policy loss"));
        }
        if !vloss.is_finite() || vgrad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("value loss"));
        }
        acc.policy_grad_norm += clip_grad_norm(&mut pgrad, cfg.max_grad_norm);
        acc.value_grad_norm += clip_grad_norm(&mut vgrad, cfg.max_grad_norm);
        self.policy_opt.step(self.policy.params_mut(), &pgrad);
        self.value_opt.step(self.value.params_mut(), &vgrad);
        acc.policy_loss += pstats.loss;
        acc.value_loss += vloss;
        acc.entropy += pstats.entropy;
        acc.max_ratio_deviation = acc.max_ratio_deviation.max(pstats.max_ratio_deviation);
        acc.gradient_steps += 1;
        Ok(())
    }
}

fn finish(mut acc: UpdateStats) -> UpdateStats {
    if acc.gradient_steps > 0 {
        let n = acc.gradient_steps as f64;
        acc.policy_loss /= n;
        acc.value_loss /= n;
        acc.entropy /= n;
        acc.policy_grad_norm /= n;
        acc.value_grad_norm /= n;
    }
    acc
}

fn chunk_bounds(len: usize, parts: usize) -> Vec<(usize, usize)> {
    let parts = parts.clamp(1, len.max(1));
    (0..parts).map(|i| (i * len / parts, (i + 1) * len / parts)).filter(|(a, b)| b > a).collect()
}

/// Single pass over the batch in contiguous minibatches with the vanilla
/// policy-gradient objective; the critic regresses onto the unbiased targets.
pub fn a2c_update(nets: &mut ActorCritic, batch: &Batch, cfg: &TrainConfig) -> Result<UpdateStats> {
    let mut acc = UpdateStats::default();
    for (lo, hi) in chunk_bounds(batch.len(), cfg.minibatches) {
        let mb: Vec<&Sample> = batch.samples[lo..hi].iter().collect();
        nets.minibatch_step(&mb, PolicyObjective::Vanilla, cfg, &mut acc)?;
    }
    Ok(finish(acc))
}

/// `cfg.epochs` passes over shuffled minibatches with the clipped surrogate.
pub fn ppo_update(
    nets: &mut ActorCritic,
    batch: &Batch,
    cfg: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Result<UpdateStats> {
    let mut acc = UpdateStats::default();
    let objective = PolicyObjective::Clipped { epsilon: cfg.clip_epsilon };
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for (lo, hi) in chunk_bounds(order.len(), cfg.minibatches) {
            let mb: Vec<&Sample> = order[lo..hi].iter().map(|&i| &batch.samples[i]).collect();
            nets.minibatch_step(&mb, objective, cfg, &mut acc)?;
        }
    }
    Ok(finish(acc))
}

/// One row of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub update: usize,
    /// Environment steps taken so far, including this update's rollout.
    pub env_steps: usize,
    /// Mean return of the episodes that finished during this rollout; NaN if none did.
    pub mean_return: f64,
    pub n_episodes: usize,
    /// Finished episodes with positive return.
    pub n_positive: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub frac_biased: f64,
    pub max_ratio_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
}

impl LearningCurve {
    /// Policy updates completed before the first rollout containing a
    /// positive-return episode, or `None` if there was none.
    pub fn updates_to_first_success(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.n_positive > 0).map(|r| r.update)
    }

    /// Episode-weighted mean return over the last `window` rows; NaN when no episode finished there.
    pub fn final_mean_return(&self, window: usize) -> f64 {
        let start = self.rows.len().saturating_sub(window.max(1));
        let (sum, count) = self.rows[start..]
            .iter()
            .filter(|r| r.n_episodes > 0)
            .fold((0.0, 0usize), |(s, c), r| (s + r.mean_return * r.n_episodes as f64, c + r.n_episodes));
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }
}

/// Alternates rollout collection and actor-critic updates. Fully determined by
/// the config (including its seed) and the environment.
pub struct Trainer<E: Environment> {
    env: E,
    cfg: TrainConfig,
    nets: ActorCritic,
    rngs: RunRngs,
    rollout: RolloutState,
    update: usize,
    env_steps: usize,
}

impl<E: Environment> Trainer<E> {
    pub fn new(env: E, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut init = stream(cfg.seed, 0);
        let nets = ActorCritic::new(env.encoding().dim(), env.n_actions(), &cfg.hidden, cfg.learning_rate, &mut init);
        let rngs = RunRngs::new(cfg.seed);
        Ok(Self { env, cfg, nets, rngs, rollout: RolloutState::default(), update: 0, env_steps: 0 })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn nets(&self) -> &ActorCritic {
        &self.nets
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    /// Collects the next batch without updating.
    pub fn collect(&mut self) -> Result<Batch> {
        let values = value_table(&self.env, &self.nets.value)?;
        let batch =
            collect_batch(&mut self.env, &mut self.rollout, &self.nets.policy, &values, &self.cfg, &mut self.rngs)?;
        self.env_steps += batch.len();
        Ok(batch)
    }

    pub fn learn(&mut self, batch: &Batch) -> Result<UpdateStats> {
        match self.cfg.algorithm {
            Algorithm::A2c => a2c_update(&mut self.nets, batch, &self.cfg),
            Algorithm::Ppo => ppo_update(&mut self.nets, batch, &self.cfg, &mut self.rngs.shuffle),
        }
    }

    /// Collect, update, and report one curve row together with the batch used.
    pub fn step(&mut self) -> Result<(CurveRow, Batch)> {
        let batch = self.collect()?;
        let stats = self.learn(&batch)?;
        let n_episodes = batch.episode_returns.len();
        let mean_return =
            if n_episodes == 0 { f64::NAN } else { batch.episode_returns.iter().sum::<f64>() / n_episodes as f64 };
        let row = CurveRow {
            update: self.update,
            env_steps: self.env_steps,
            mean_return,
            n_episodes,
            n_positive: batch.episode_returns.iter().filter(|r| **r > 0.0).count(),
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            frac_biased: batch.fraction_biased(),
            max_ratio_deviation: stats.max_ratio_deviation,
        };
        self.update += 1;
        Ok((row, batch))
    }
}

/// Runs `cfg.updates` updates and returns the learning curve.
pub fn train<E: Environment>(env: E, cfg: &TrainConfig) -> Result<LearningCurve> {
    train_with(env, cfg, |_, _, _| {})
}

/// Like [`train`], calling `observe(row, batch, nets)` after every update.
pub fn train_with<E: Environment>(
    env: E,
    cfg: &TrainConfig,
    mut observe: impl FnMut(&CurveRow, &Batch, &ActorCritic),
) -> Result<LearningCurve> {
    let mut trainer = Trainer::new(env, cfg.clone())?;
    let mut curve = LearningCurve::default();
    for _ in 0..cfg.updates {
        let (row, batch) = trainer.step()?;
        observe(&row, &batch, &trainer.nets);
        curve.rows.push(row);
    }
    Ok(curve)
}
