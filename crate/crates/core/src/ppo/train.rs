//! Rollout collection, the training loop, greedy/stochastic deployment and
//! checkpoints.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::policy::{encode_observation, greedy_action, policy_forward, sample_action, ActorCritic};
use super::update::{ppo_update, Optimizers};
use crate::env::{EnvConfig, InitTheta, YawEnv};
use crate::error::{Error, Result};
use crate::trace::Trace;

/// One row of the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update_idx: usize,
    pub steps: usize,
    /// Mean undiscounted return of episodes finished during the rollout;
    /// NaN when none finished.
    pub mean_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "update_idx,steps,mean_return,policy_loss,value_loss,entropy")?;
    for p in curve {
        let ret = if p.mean_return.is_nan() { String::new() } else { p.mean_return.to_string() };
        writeln!(f, "{},{},{},{},{},{}", p.update_idx, p.steps, ret, p.policy_loss, p.value_loss, p.entropy)?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ActorCritic,
    pub curve: Vec<CurvePoint>,
    pub steps: usize,
}

pub fn train(env: &YawEnv, cfg: &PpoConfig) -> Result<TrainOutcome> {
    train_with(env, cfg, |_| {})
}

/// Trains from scratch, calling `on_update` after every update.
pub fn train_with<F: FnMut(&CurvePoint)>(env: &YawEnv, cfg: &PpoConfig, mut on_update: F) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut env = env.clone();
    let max_start = env.max_start().ok_or_else(|| {
        Error::Range(format!(
            "{} cycles of wind cannot hold a {}-cycle episode",
            env.n_cycles(),
            env.config().params.episode_len
        ))
    })?;
    let j = env.config().params.j;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ac = ActorCritic::new(j, &cfg.hidden, &mut rng);
    let mut opt = Optimizers::new(&ac, cfg.learning_rate);
    let mut buffer = RolloutBuffer::new(cfg.n_steps, ac.input_dim());

    let reset = |env: &mut YawEnv, rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let start = rng.random_range(0..=max_start);
        let offset = if cfg.init_offset_deg > 0.0 {
            rng.random_range(-cfg.init_offset_deg..=cfg.init_offset_deg)
        } else {
            0.0
        };
        encode_observation(&env.reset(start, InitTheta::Offset(offset))?, j)
    };

    let mut x = reset(&mut env, &mut rng)?;
    let mut episode_return = 0.0;
    let mut curve = Vec::with_capacity(cfg.n_updates());
    let mut steps = 0;
    for update_idx in 0..cfg.n_updates() {
        buffer.clear();
        let mut finished = Vec::new();
        while !buffer.is_full() {
            let (probs, value) = policy_forward(&ac, &x)?;
            let (action, logp) = sample_action(&probs, &mut rng)?;
            let out = env.step(action)?;
            episode_return += out.reward;
            let mut reward = out.reward * cfg.reward_scale;
            let next_x = encode_observation(&out.observation, j)?;
            if out.done {
                // the episode is cut by the time limit, not by the dynamics
                reward += cfg.gamma * policy_forward(&ac, &next_x)?.1;
            }
            buffer.push(&x, action, logp, reward, value, out.done)?;
            steps += 1;
            if out.done {
                finished.push(episode_return);
                episode_return = 0.0;
                x = reset(&mut env, &mut rng)?;
            } else {
                x = next_x;
            }
        }
        let bootstrap = policy_forward(&ac, &x)?.1;
        buffer.finish(bootstrap, cfg.gamma, cfg.gae_lambda)?;
        let stats = ppo_update(&mut ac, &mut opt, &buffer, cfg, &mut rng)?;
        let mean_return = if finished.is_empty() {
            f64::NAN
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        };
        let point = CurvePoint {
            update_idx,
            steps,
            mean_return,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
        };
        on_update(&point);
        curve.push(point);
    }
    Ok(TrainOutcome { model: ac, curve, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    Greedy,
    Stochastic { seed: u64 },
}

/// Runs the policy over every cycle of `env`'s wind, starting at cycle 0.
pub fn evaluate(ac: &ActorCritic, env: &YawEnv, mode: EvalMode, init: InitTheta) -> Result<Trace> {
    ac.validate()?;
    let mut cfg = env.config().clone();
    if cfg.params.j != ac.j {
        return Err(Error::Config(format!("model expects j = {}, environment has j = {}", ac.j, cfg.params.j)));
    }
    cfg.params.episode_len = env.n_cycles() - 1;
    let mut env = env.with_config(cfg)?;
    let mut rng = match mode {
        EvalMode::Stochastic { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        EvalMode::Greedy => None,
    };
    env.run_episode(0, init, |obs| {
        let (probs, _) = policy_forward(ac, &encode_observation(obs, ac.j)?)?;
        match rng.as_mut() {
            Some(r) => Ok(sample_action(&probs, r)?.0),
            None => Ok(greedy_action(&probs)),
        }
    })
}

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Self-contained trained model: networks plus the environment and learner
/// settings they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub model: ActorCritic,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub steps: usize,
}

impl Checkpoint {
    pub fn new(model: ActorCritic, env: EnvConfig, ppo: PpoConfig, steps: usize) -> Self {
        Self { format: CHECKPOINT_FORMAT, model, env, ppo, steps }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Schema(format!("checkpoint format {} (expected {CHECKPOINT_FORMAT})", ck.format)));
        }
        ck.model.validate()?;
        Ok(ck)
    }
}
