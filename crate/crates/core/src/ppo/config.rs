use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    /// Environment steps per rollout.
    pub n_steps: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Discount factor.
    pub gamma: f64,
    pub gae_lambda: f64,
    pub total_steps: usize,
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient-norm cap per minibatch; 0 disables it.
    pub max_grad_norm: f64,
    /// Multiplies rewards before they reach the learner.
    pub reward_scale: f64,
    /// Training episodes start with the nacelle offset uniformly within
    /// this many degrees of the wind.
    pub init_offset_deg: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            n_steps: 2048,
            batch_size: 64,
            epochs: 10,
            gamma: 0.99,
            gae_lambda: 0.95,
            total_steps: 200_000,
            clip_eps: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            reward_scale: 0.001,
            init_offset_deg: 20.0,
            hidden: vec![64, 64],
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate = {} must be positive", self.learning_rate));
        }
        if self.n_steps == 0 || self.batch_size == 0 || self.epochs == 0 || self.total_steps == 0 {
            return bad("n_steps, batch_size, epochs and total_steps must be positive".into());
        }
        if self.n_steps % self.batch_size != 0 {
            return bad(format!("n_steps {} is not a multiple of batch_size {}", self.n_steps, self.batch_size));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} outside (0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda = {} outside [0, 1]", self.gae_lambda));
        }
        if !(self.clip_eps > 0.0) {
            return bad(format!("clip_eps = {} must be positive", self.clip_eps));
        }
        for (name, v) in [
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
            ("max_grad_norm", self.max_grad_norm),
            ("init_offset_deg", self.init_offset_deg),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return bad(format!("reward_scale = {} must be positive", self.reward_scale));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden layer sizes {:?}", self.hidden));
        }
        Ok(())
    }

    /// Number of rollout/update rounds covering `total_steps`.
    pub fn n_updates(&self) -> usize {
        self.total_steps.div_ceil(self.n_steps)
    }
}
