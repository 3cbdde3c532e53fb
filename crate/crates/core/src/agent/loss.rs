//! Scalar losses over a set of samples and their exact parameter gradients.
//! All losses are minimized.

use crate::agent::Sample;
use crate::error::Result;
use crate::nn::{entropy_and_grad, log_prob_logit_grad, DenseNet};

/// Policy objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyObjective {
    /// `-mean(log pi(a|s) * A)`.
    Vanilla,
    /// `-mean(min(r A, clip(r, 1 - eps, 1 + eps) A))` with `r = pi / pi_old`.
    Clipped { epsilon: f64 },
}

/// Diagnostics of one policy-loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyLossStats {
    pub loss: f64,
    pub entropy: f64,
    /// `max |r - 1|` over the samples (0 for the vanilla objective).
    pub max_ratio_deviation: f64,
}

/// Policy loss (objective minus `entropy_coef` times mean entropy) and its gradient.
pub fn policy_loss_and_grad(
    net: &DenseNet,
    samples: &[&Sample],
    objective: PolicyObjective,
    entropy_coef: f64,
) -> Result<(PolicyLossStats, Vec<f64>)> {
    let mut grad = vec![0.0; net.n_params()];
    let mut stats = PolicyLossStats::default();
    if samples.is_empty() {
        return Ok((stats, grad));
    }
    let n = samples.len() as f64;
    for s in samples {
        let (logits, cache) = net.forward(&s.features)?;
        let (logp, dlogp) = log_prob_logit_grad(&logits, s.action);
        let (h, dh) = entropy_and_grad(&logits);
        let adv = s.advantage;
        // coefficient on d(log pi)/dz in the per-sample objective
        let (objective_value, score_weight) = match objective {
            PolicyObjective::Vanilla => (logp * adv, adv),
            PolicyObjective::Clipped { epsilon } => {
                let ratio = (logp - s.behavior_log_prob).exp();
                stats.max_ratio_deviation = stats.max_ratio_deviation.max((ratio - 1.0).abs());
                let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
                if ratio * adv <= clipped * adv {
                    (ratio * adv, ratio * adv)
                } else {
                    (clipped * adv, 0.0)
                }
            }
        };
        stats.loss -= (objective_value + entropy_coef * h) / n;
        stats.entropy += h / n;
        let dz: Vec<f64> =
            dlogp.iter().zip(&dh).map(|(dl, dhh)| -(score_weight * dl + entropy_coef * dhh) / n).collect();
        net.backward_into(&cache, &dz, &mut grad)?;
    }
    Ok((stats, grad))
}

/// `value_coef * mean((V(s) - target)^2)` and its gradient.
pub fn value_loss_and_grad(net: &DenseNet, samples: &[&Sample], value_coef: f64) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; net.n_params()];
    if samples.is_empty() {
        return Ok((0.0, grad));
    }
    let n = samples.len() as f64;
    let mut loss = 0.0;
    for s in samples {
        let (out, cache) = net.forward(&s.features)?;
        let err = out[0] - s.estimate.critic_target;
        loss += value_coef * err * err / n;
        net.backward_into(&cache, &[2.0 * value_coef * err / n], &mut grad)?;
    }
    Ok((loss, grad))
}

/// Scales `grad` down to at most `max_norm` in Euclidean norm (no-op when `max_norm == 0`).
/// Returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}
