//! Actor-critic pair, observation encoding and action selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::env::{Action, Observation};
use crate::error::{Error, Result};

/// Network inputs per observation row.
pub const ROW_FEATURES: usize = 5;
pub const N_ACTIONS: usize = 3;

/// Separate policy (3 logits) and value (1 output) networks over the same
/// encoded observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub j: usize,
    pub policy: MlpParams,
    pub value: MlpParams,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(j: usize, hidden: &[usize], rng: &mut R) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![j * ROW_FEATURES];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let g = std::f64::consts::SQRT_2;
        let policy = MlpParams::orthogonal(&sizes(N_ACTIONS), g, 0.01, rng);
        let value = MlpParams::orthogonal(&sizes(1), g, 1.0, rng);
        Self { j, policy, value }
    }

    pub fn input_dim(&self) -> usize {
        self.j * ROW_FEATURES
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.value.validate()?;
        let d = self.input_dim();
        if self.policy.input_dim() != d || self.value.input_dim() != d {
            return Err(Error::Config(format!("networks do not take {d} inputs for j = {}", self.j)));
        }
        if self.policy.output_dim() != N_ACTIONS || self.value.output_dim() != 1 {
            return Err(Error::Config("policy needs 3 outputs and value 1".into()));
        }
        Ok(())
    }
}

/// Flattens an observation row by row: `action - 1`, `gamma / 180`,
/// `sin phi`, `cos phi`, standardized speed.
pub fn encode_observation(obs: &Observation, j: usize) -> Result<Vec<f64>> {
    if obs.rows.len() != j {
        return Err(Error::LengthMismatch(format!("observation has {} rows, expected {j}", obs.rows.len())));
    }
    let mut x = Vec::with_capacity(j * ROW_FEATURES);
    for r in &obs.rows {
        let phi = r.phi.to_radians();
        x.extend_from_slice(&[r.action.direction(), r.gamma / 180.0, phi.sin(), phi.cos(), r.v_tilde]);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    Ok(x)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Action probabilities and state value for an encoded observation.
pub fn policy_forward(ac: &ActorCritic, x: &[f64]) -> Result<([f64; N_ACTIONS], f64)> {
    if x.len() != ac.input_dim() {
        return Err(Error::LengthMismatch(format!("{} inputs, expected {}", x.len(), ac.input_dim())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let p = softmax(&ac.policy.forward(x));
    let v = ac.value.forward(x)[0];
    Ok(([p[0], p[1], p[2]], v))
}

/// Draws an action from `probs` by inverting the cumulative distribution.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64; N_ACTIONS], rng: &mut R) -> Result<(Action, f64)> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("not a probability vector: {probs:?}")));
    }
    let u: f64 = rng.random::<f64>() * sum;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if *p > 0.0 && u < acc {
            chosen = Some(i);
            break;
        }
    }
    // rounding can leave u just above the final partial sum
    let i = chosen.unwrap_or_else(|| probs.iter().rposition(|p| *p > 0.0).unwrap_or(0));
    Ok((Action::ALL[i], probs[i].ln()))
}

/// Most probable action, lowest code on ties.
pub fn greedy_action(probs: &[f64; N_ACTIONS]) -> Action {
    let mut best = 0;
    for i in 1..N_ACTIONS {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    Action::ALL[best]
}
