//! Wind-turbine yaw control: a discrete-time simulator built on wind logs, a
//! PPO actor-critic controller, the conventional threshold-based baseline
//! and the metrics used to compare them.

pub mod angle;
pub mod cyca;
pub mod env;
pub mod error;
pub mod metrics;
pub mod power;
pub mod ppo;
pub mod trace;
pub mod wind;

pub use angle::{circular_mean, wrap_angle, yaw_error};
pub use cyca::{calibrate_threshold, replay_cyca_l, run_cyca_s, Calibration, CycaConfig, CycaRun, NacelleLog};
pub use env::{Action, EnvConfig, EnvParams, InitTheta, Observation, YawEnv};
pub use error::{Error, Result};
pub use metrics::{compare, compare_traces, compute_metrics, yaw_consumption_delta, Comparison, MetricsReport};
pub use power::{power_ideal, power_with_misalignment, PowerRegion, TurbineParams, TurbineSpec};
pub use ppo::{ActorCritic, Checkpoint, EvalMode, PpoConfig};
pub use trace::{CycleRecord, Trace};
pub use wind::{generate_synthetic, load_series, split_train_test, GeneratorSpec, Standardizer, WindSample, WindSeries};
