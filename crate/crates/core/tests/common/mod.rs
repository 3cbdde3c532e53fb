#![allow(dead_code)]

use pathens_core::advantage::{AdvantageOutput, PathEnsemble};
use pathens_core::agent::Sample;
use pathens_core::nn::{log_softmax, DenseNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A sample with the given features and advantages; the estimator fields are filler.
pub fn sample(features: Vec<f64>, action: usize, behavior_log_prob: f64, advantage: f64, critic_target: f64) -> Sample {
    let estimate = AdvantageOutput {
        ensemble: PathEnsemble::new(0, vec![(1, advantage)]).unwrap(),
        value: 0.0,
        baseline_advantage: advantage,
        biased_advantage: advantage,
        chosen_k: 1,
        used_biased: false,
        mixed_advantage: advantage,
        critic_target,
    };
    Sample { state: 0, action, features, behavior_log_prob, estimate, advantage }
}

/// Random small policy net plus samples whose behavior log-probs sit
/// `log_ratio_offsets` away from the net's current ones.
pub fn random_setup(seed: u64, n: usize, offsets: &[f64]) -> (DenseNet, Vec<Sample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = DenseNet::init(&[3, 6, 5, 4], 1.0, &mut rng);
    let samples = (0..n)
        .map(|i| {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let action = rng.random_range(0..4);
            let logp = log_softmax(&net.forward(&x).unwrap().0)[action];
            let adv = rng.random_range(-2.0..2.0);
            let target = rng.random_range(-3.0..3.0);
            sample(x, action, logp - offsets[i % offsets.len()], adv, target)
        })
        .collect();
    (net, samples)
}
