//! Actor-critic training (A2C and PPO) on top of the advantage estimators.

mod batch;
mod config;
mod loss;
mod train;

pub(crate) use batch::stream;
pub use batch::{collect_batch, value_table, Batch, RolloutState, RunRngs, Sample};
pub use config::{Algorithm, TrainConfig};
pub use loss::{clip_grad_norm, policy_loss_and_grad, value_loss_and_grad, PolicyLossStats, PolicyObjective};
pub use train::{
    a2c_update, ppo_update, train, train_with, ActorCritic, CurveRow, LearningCurve, Trainer, UpdateStats,
};
