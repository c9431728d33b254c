//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yawrl_core::ppo::{encode_observation, policy_forward, sample_action, ActorCritic, RolloutBuffer};
use yawrl_core::wind::GeneratorSpec;
use yawrl_core::{generate_synthetic, EnvConfig, EnvParams, InitTheta, Standardizer, TurbineParams, WindSeries, YawEnv};

pub fn steady_series(length_s: i64) -> WindSeries {
    let spec = GeneratorSpec { length_s, ..GeneratorSpec::steady() };
    generate_synthetic(&spec, 1).expect("valid preset")
}

pub fn env(series: &WindSeries) -> YawEnv {
    let cfg = EnvConfig::new(EnvParams::default(), TurbineParams::default(), Standardizer::fit(series).expect("non-empty"))
        .expect("default config");
    YawEnv::new(series, cfg).expect("long enough")
}

pub fn model(j: usize, seed: u64) -> ActorCritic {
    ActorCritic::new(j, &[64, 64], &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Full buffer of `n` on-policy steps with advantages computed.
pub fn rollout(env: &mut YawEnv, ac: &ActorCritic, n: usize, seed: u64) -> RolloutBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = env.config().params.j;
    let max_start = env.max_start().expect("long enough");
    let mut buf = RolloutBuffer::new(n, ac.input_dim());
    let mut obs = env.reset(rng.random_range(0..=max_start), InitTheta::Align).expect("reset");
    while !buf.is_full() {
        let x = encode_observation(&obs, j).expect("finite");
        let (p, v) = policy_forward(ac, &x).expect("forward");
        let (a, lp) = sample_action(&p, &mut rng).expect("simplex");
        let out = env.step(a).expect("step");
        buf.push(&x, a, lp, out.reward * 1e-3, v, out.done).expect("push");
        obs = if out.done { env.reset(0, InitTheta::Align).expect("reset") } else { out.observation };
    }
    buf.finish(0.0, 0.99, 0.95).expect("full");
    buf
}
