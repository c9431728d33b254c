//! Clipped-surrogate loss, its analytic gradient and the minibatch update.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::policy::{softmax, ActorCritic, N_ACTIONS};
use crate::error::{Error, Result};

/// `min(r A, clip(r, 1 - eps, 1 + eps) A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (ratio * advantage).min(clipped * advantage)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Loss coefficients taken from the config.
#[derive(Debug, Clone, Copy)]
pub struct LossCoefs {
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl From<&PpoConfig> for LossCoefs {
    fn from(c: &PpoConfig) -> Self {
        Self { clip_eps: c.clip_eps, value_coef: c.value_coef, entropy_coef: c.entropy_coef }
    }
}

/// Minibatch of samples referencing a buffer.
pub struct Batch<'a> {
    pub buffer: &'a RolloutBuffer,
    pub advantages: &'a [f64],
    pub indices: &'a [usize],
}

/// Mean loss over the batch and its gradients with respect to the policy
/// and value parameters.
pub fn loss_and_grad(ac: &ActorCritic, batch: &Batch<'_>, coefs: LossCoefs) -> (LossStats, Vec<f64>, Vec<f64>) {
    let n = batch.indices.len() as f64;
    let mut gp = vec![0.0; ac.policy.params.len()];
    let mut gv = vec![0.0; ac.value.params.len()];
    let mut s = LossStats::default();
    for &i in batch.indices {
        let x = batch.buffer.observation(i);
        let a = batch.buffer.actions[i].code() as usize;
        let adv = batch.advantages[i];

        let pc = ac.policy.forward_cached(x);
        let probs = softmax(pc.output());
        let logp: Vec<f64> = probs.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect();
        let log_ratio = logp[a] - batch.buffer.log_probs[i];
        let ratio = log_ratio.exp();
        let unclipped = ratio * adv;
        let surrogate = clipped_objective(ratio, adv, coefs.clip_eps);
        let entropy: f64 = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();

        s.policy_loss -= surrogate / n;
        s.entropy += entropy / n;
        s.approx_kl += ((ratio - 1.0) - log_ratio) / n;
        if (ratio - 1.0).abs() > coefs.clip_eps {
            s.clip_fraction += 1.0 / n;
        }

        // d surrogate / d log pi_a: the unclipped branch carries the
        // gradient; the clipped branch is flat wherever it is the smaller one
        let ds_dlogp = if unclipped <= surrogate { adv * ratio } else { 0.0 };
        let mut d_logits = [0.0; N_ACTIONS];
        for k in 0..N_ACTIONS {
            let onehot = if k == a { 1.0 } else { 0.0 };
            let d_policy = -ds_dlogp * (onehot - probs[k]);
            let d_entropy = -probs[k] * (logp[k] + entropy);
            d_logits[k] = (d_policy - coefs.entropy_coef * d_entropy) / n;
        }
        ac.policy.backward(&pc, &d_logits, &mut gp);

        let vc = ac.value.forward_cached(x);
        let err = vc.output()[0] - batch.buffer.returns[i];
        s.value_loss += err * err / n;
        ac.value.backward(&vc, &[coefs.value_coef * 2.0 * err / n], &mut gv);
    }
    s.total = s.policy_loss + coefs.value_coef * s.value_loss - coefs.entropy_coef * s.entropy;
    (s, gp, gv)
}

/// Optimizer state for both networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizers {
    pub policy: Adam,
    pub value: Adam,
}

impl Optimizers {
    pub fn new(ac: &ActorCritic, lr: f64) -> Self {
        Self { policy: Adam::new(ac.policy.params.len(), lr), value: Adam::new(ac.value.params.len(), lr) }
    }
}

/// `epochs` passes of shuffled minibatch steps over a finished buffer.
/// Returns loss diagnostics averaged over all minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    ac: &mut ActorCritic,
    opt: &mut Optimizers,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<LossStats> {
    if !buffer.is_full() || !buffer.has_advantages() {
        return Err(Error::State("update needs a full buffer with advantages".into()));
    }
    let adv = buffer.normalized_advantages()?;
    let coefs = LossCoefs::from(cfg);
    let mut idx: Vec<usize> = (0..buffer.len()).collect();
    let mut mean = LossStats::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(cfg.batch_size) {
            let (s, mut gp, mut gv) =
                loss_and_grad(ac, &Batch { buffer, advantages: &adv, indices: chunk }, coefs);
            if !s.total.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss (policy {}, value {}, entropy {})",
                    s.policy_loss, s.value_loss, s.entropy
                )));
            }
            if cfg.max_grad_norm > 0.0 {
                let norm = gp.iter().chain(&gv).map(|g| g * g).sum::<f64>().sqrt();
                if norm > cfg.max_grad_norm {
                    let k = cfg.max_grad_norm / (norm + 1e-6);
                    gp.iter_mut().chain(gv.iter_mut()).for_each(|g| *g *= k);
                }
            }
            opt.policy.step(&mut ac.policy.params, &gp);
            opt.value.step(&mut ac.value.params, &gv);
            count += 1.0;
            mean.policy_loss += s.policy_loss;
            mean.value_loss += s.value_loss;
            mean.entropy += s.entropy;
            mean.total += s.total;
            mean.approx_kl += s.approx_kl;
            mean.clip_fraction += s.clip_fraction;
        }
    }
    for f in [
        &mut mean.policy_loss,
        &mut mean.value_loss,
        &mut mean.entropy,
        &mut mean.total,
        &mut mean.approx_kl,
        &mut mean.clip_fraction,
    ] {
        *f /= count;
    }
    Ok(mean)
}
