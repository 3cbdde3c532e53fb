//! Small dense networks with hand-written reverse-mode gradients.

mod checkpoint;
mod features;
mod gradcheck;
mod net;
mod optim;
mod policy;

pub use checkpoint::Checkpoint;
pub use features::FeatureEncoding;
pub use gradcheck::finite_diff_check;
pub use net::{param_count, ActivationCache, DenseNet};
pub use optim::Adam;
pub use policy::{action_probs, entropy_and_grad, log_prob_logit_grad, log_softmax, policy_log_prob_grad, softmax};
