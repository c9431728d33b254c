//! Actor-critic proximal policy optimization written from scratch.

pub mod adam;
pub mod buffer;
pub mod config;
pub mod gae;
pub mod mlp;
pub mod policy;
pub mod train;
pub mod update;

pub use adam::Adam;
pub use buffer::RolloutBuffer;
pub use config::PpoConfig;
pub use gae::compute_gae;
pub use mlp::MlpParams;
pub use policy::{encode_observation, greedy_action, policy_forward, sample_action, softmax, ActorCritic};
pub use train::{evaluate, train, train_with, write_curve_csv, Checkpoint, CurvePoint, EvalMode, TrainOutcome};
pub use update::{clipped_objective, loss_and_grad, ppo_update, Batch, LossCoefs, LossStats, Optimizers};
