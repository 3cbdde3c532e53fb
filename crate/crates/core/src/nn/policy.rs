//! Softmax policy head over a [`DenseNet`]'s output logits.

use crate::error::{Error, Result};
use crate::nn::{DenseNet, FeatureEncoding};

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Entropy of the softmax distribution and its gradient with respect to the logits.
pub fn entropy_and_grad(logits: &[f64]) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let h = -logp.iter().map(|l| l.exp() * l).sum::<f64>();
    // dH/dz_j = -p_j (log p_j + H)
    let grad = logp.iter().map(|l| -l.exp() * (l + h)).collect();
    (h, grad)
}

/// Gradient of `log pi(action)` with respect to the logits: `e_action - pi`.
pub fn log_prob_logit_grad(logits: &[f64], action: usize) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let grad = logp.iter().enumerate().map(|(j, l)| f64::from(u8::from(j == action)) - l.exp()).collect();
    (logp[action], grad)
}

/// `log pi(action | state)` and its gradient with respect to the network parameters.
pub fn policy_log_prob_grad(
    net: &DenseNet,
    encoding: &FeatureEncoding,
    state: usize,
    action: usize,
) -> Result<(f64, Vec<f64>)> {
    if action >= net.output_dim() {
        return Err(Error::ActionOutOfRange { action, n_actions: net.output_dim() });
    }
    let (logits, cache) = net.forward(encoding.features(state))?;
    let (logp, dz) = log_prob_logit_grad(&logits, action);
    Ok((logp, net.backward(&cache, &dz)?))
}

/// Action probabilities in `state`.
pub fn action_probs(net: &DenseNet, encoding: &FeatureEncoding, state: usize) -> Result<Vec<f64>> {
    Ok(softmax(&net.forward(encoding.features(state))?.0))
}
