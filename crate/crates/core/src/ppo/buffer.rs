//! Fixed-size on-policy rollout storage.

use super::gae::compute_gae;
use crate::env::Action;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    obs_dim: usize,
    capacity: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        Self {
            obs_dim,
            capacity,
            obs: Vec::with_capacity(capacity * obs_dim),
            actions: Vec::with_capacity(capacity),
            log_probs: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn has_advantages(&self) -> bool {
        !self.advantages.is_empty()
    }

    pub fn clear(&mut self) {
        self.obs.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.values.clear();
        self.dones.clear();
        self.advantages.clear();
        self.returns.clear();
    }

    pub fn push(&mut self, obs: &[f64], action: Action, log_prob: f64, reward: f64, value: f64, done: bool) -> Result<()> {
        if self.is_full() {
            return Err(Error::State("rollout buffer is full".into()));
        }
        if obs.len() != self.obs_dim {
            return Err(Error::LengthMismatch(format!("observation of {} values, expected {}", obs.len(), self.obs_dim)));
        }
        self.obs.extend_from_slice(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
        self.advantages.clear();
        self.returns.clear();
        Ok(())
    }

    /// Computes advantages and returns once the buffer is full.
    pub fn finish(&mut self, bootstrap_value: f64, gamma: f64, lambda: f64) -> Result<()> {
        if !self.is_full() {
            return Err(Error::State(format!("buffer holds {} of {} steps", self.len(), self.capacity)));
        }
        let (a, r) = compute_gae(&self.rewards, &self.values, &self.dones, bootstrap_value, gamma, lambda)?;
        self.advantages = a;
        self.returns = r;
        Ok(())
    }

    /// Advantages shifted and scaled to zero mean and unit variance.
    pub fn normalized_advantages(&self) -> Result<Vec<f64>> {
        if !self.has_advantages() {
            return Err(Error::State("advantages not computed".into()));
        }
        let n = self.advantages.len() as f64;
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt() + 1e-8;
        Ok(self.advantages.iter().map(|a| (a - mean) / sd).collect())
    }
}
