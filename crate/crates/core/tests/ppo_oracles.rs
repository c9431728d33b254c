use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use yawrl_core::ppo::{
    clipped_objective, compute_gae, evaluate, loss_and_grad, policy_forward, ppo_update, softmax, train, ActorCritic,
    Batch, EvalMode, LossCoefs, Optimizers, RolloutBuffer,
};
use yawrl_core::wind::GeneratorSpec;
use yawrl_core::{generate_synthetic, Action, EnvConfig, EnvParams, InitTheta, PpoConfig, Standardizer, TurbineParams, YawEnv};

/// Small network with perturbed weights and a random full buffer whose old
/// log-probabilities sit near the current ones.
fn instance(seed: u64, n: usize) -> (ActorCritic, RolloutBuffer, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ac = ActorCritic::new(2, &[8, 8], &mut rng);
    let noise = Normal::new(0.0, 0.3).unwrap();
    for p in ac.policy.params.iter_mut().chain(ac.value.params.iter_mut()) {
        *p += noise.sample(&mut rng);
    }
    let mut buf = RolloutBuffer::new(n, ac.input_dim());
    for _ in 0..n {
        let x: Vec<f64> = (0..ac.input_dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let a = Action::ALL[rng.random_range(0..3)];
        let (p, _) = policy_forward(&ac, &x).unwrap();
        let old = p[a.code() as usize].ln() + noise.sample(&mut rng);
        buf.push(&x, a, old, 0.0, 0.0, false).unwrap();
    }
    buf.returns = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    buf.advantages = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let adv = buf.advantages.clone();
    (ac, buf, adv)
}

fn total_loss(ac: &ActorCritic, buf: &RolloutBuffer, adv: &[f64], idx: &[usize], coefs: LossCoefs) -> f64 {
    loss_and_grad(ac, &Batch { buffer: buf, advantages: adv, indices: idx }, coefs).0.total
}

#[test]
fn analytic_gradients_match_central_differences() {
    let coefs = LossCoefs { clip_eps: 0.2, value_coef: 0.5, entropy_coef: 0.01 };
    let h = 1e-5;
    for seed in 0..20 {
        let (ac, buf, adv) = instance(seed, 16);
        let idx: Vec<usize> = (0..16).collect();
        let (_, gp, gv) = loss_and_grad(&ac, &Batch { buffer: &buf, advantages: &adv, indices: &idx }, coefs);
        let n_policy = ac.policy.params.len();
        for i in 0..n_policy + ac.value.params.len() {
            let shifted = |d: f64| {
                let mut m = ac.clone();
                if i < n_policy {
                    m.policy.params[i] += d;
                } else {
                    m.value.params[i - n_policy] += d;
                }
                total_loss(&m, &buf, &adv, &idx, coefs)
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let an = if i < n_policy { gp[i] } else { gv[i - n_policy] };
            let scale = an.abs().max(fd.abs()).max(1e-4);
            assert!((an - fd).abs() <= 1e-4 * scale, "seed {seed} param {i}: analytic {an} vs numeric {fd}");
        }
    }
}

/// Discounted sum of rewards to the end of the episode (or the buffer,
/// then the bootstrap value) minus the value estimate.
fn monte_carlo(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            let mut g = 0.0;
            let mut disc = 1.0;
            let mut k = t;
            loop {
                g += disc * rewards[k];
                disc *= gamma;
                if dones[k] {
                    break;
                }
                k += 1;
                if k == rewards.len() {
                    g += disc * bootstrap;
                    break;
                }
            }
            g - values[t]
        })
        .collect()
}

#[test]
fn gae_with_unit_lambda_equals_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let d: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
        let boot = rng.random_range(-5.0..5.0);
        let gamma = rng.random_range(0.5..=1.0);
        let (adv, ret) = compute_gae(&r, &v, &d, boot, gamma, 1.0).unwrap();
        let mc = monte_carlo(&r, &v, &d, boot, gamma);
        for t in 0..n {
            assert!((adv[t] - mc[t]).abs() < 1e-10, "{adv:?} vs {mc:?}");
            assert!((ret[t] - (adv[t] + v[t])).abs() < 1e-12);
        }
    }
}

#[test]
fn clipped_objective_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let ratio = rng.random_range(0.0..3.0);
        let a = rng.random_range(-3.0..3.0);
        let eps = rng.random_range(0.01..1.0);
        let obj = clipped_objective(ratio, a, eps);
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * a;
        assert!(obj <= (ratio * a).max(clipped));
        assert!(obj <= ratio * a);
        assert_eq!(clipped_objective(ratio, a, f64::INFINITY), ratio * a);
    }
}

#[test]
fn unbounded_clip_gives_the_plain_surrogate() {
    let (ac, buf, adv) = instance(5, 32);
    let idx: Vec<usize> = (0..32).collect();
    let coefs = LossCoefs { clip_eps: f64::INFINITY, value_coef: 0.0, entropy_coef: 0.0 };
    let got = loss_and_grad(&ac, &Batch { buffer: &buf, advantages: &adv, indices: &idx }, coefs).0.policy_loss;
    let want = -idx
        .iter()
        .map(|&i| {
            let (p, _) = policy_forward(&ac, buf.observation(i)).unwrap();
            let a = buf.actions[i].code() as usize;
            (p[a].ln() - buf.log_probs[i]).exp() * adv[i]
        })
        .sum::<f64>()
        / 32.0;
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn identity_ratio_gives_minus_mean_advantage() {
    let (ac, mut buf, adv) = instance(6, 8);
    for i in 0..8 {
        let (p, _) = policy_forward(&ac, &buf.observation(i).to_vec()).unwrap();
        buf.log_probs[i] = p[buf.actions[i].code() as usize].ln();
    }
    let idx: Vec<usize> = (0..8).collect();
    let coefs = LossCoefs { clip_eps: 0.2, value_coef: 0.5, entropy_coef: 0.0 };
    let s = loss_and_grad(&ac, &Batch { buffer: &buf, advantages: &adv, indices: &idx }, coefs).0;
    let mean_adv = adv.iter().sum::<f64>() / 8.0;
    assert!((s.policy_loss + mean_adv).abs() < 1e-12);
}

#[test]
fn update_is_reproducible_and_changes_params() {
    let (ac, buf, _) = instance(9, 64);
    let cfg = PpoConfig { n_steps: 64, batch_size: 16, epochs: 2, ..PpoConfig::default() };
    let run = || {
        let mut m = ac.clone();
        let mut opt = Optimizers::new(&m, cfg.learning_rate);
        let stats = ppo_update(&mut m, &mut opt, &buf, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        (m, stats)
    };
    let (a, sa) = run();
    let (b, sb) = run();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    assert_ne!(a, ac);
}

#[test]
fn softmax_shift_keeps_sampled_actions() {
    use yawrl_core::ppo::sample_action;
    let z = [0.4, -0.2, 1.1];
    let p = softmax(&z);
    let q = softmax(&z.map(|x| x - 3.0));
    let (p, q) = ([p[0], p[1], p[2]], [q[0], q[1], q[2]]);
    let mut r1 = ChaCha8Rng::seed_from_u64(8);
    let mut r2 = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5000 {
        assert_eq!(sample_action(&p, &mut r1).unwrap().0, sample_action(&q, &mut r2).unwrap().0);
    }
}

fn small_env() -> YawEnv {
    let series = generate_synthetic(&GeneratorSpec { length_s: 4000, ..GeneratorSpec::steady() }, 3).unwrap();
    let cfg = EnvConfig::new(
        EnvParams { episode_len: 64, ..EnvParams::default() },
        TurbineParams::default(),
        Standardizer::fit(&series).unwrap(),
    )
    .unwrap();
    YawEnv::new(&series, cfg).unwrap()
}

#[test]
fn training_is_deterministic_and_counts_updates() {
    let env = small_env();
    let cfg = PpoConfig { n_steps: 128, batch_size: 32, epochs: 2, total_steps: 256, seed: 4, ..PpoConfig::default() };
    let a = train(&env, &cfg).unwrap();
    let b = train(&env, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.curve.len(), 2);
    assert_eq!(a.steps, 256);

    let one = train(&env, &PpoConfig { total_steps: 128, ..cfg.clone() }).unwrap();
    assert_eq!(one.curve.len(), 1);
    let other_seed = train(&env, &PpoConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a.model, other_seed.model);
}

#[test]
fn evaluation_modes() {
    let env = small_env();
    let ac = ActorCritic::new(12, &[16, 16], &mut ChaCha8Rng::seed_from_u64(0));
    let before = ac.clone();
    let g = evaluate(&ac, &env, EvalMode::Greedy, InitTheta::Align).unwrap();
    assert_eq!(g.len(), env.n_cycles());
    let s1 = evaluate(&ac, &env, EvalMode::Stochastic { seed: 7 }, InitTheta::Align).unwrap();
    let s2 = evaluate(&ac, &env, EvalMode::Stochastic { seed: 7 }, InitTheta::Align).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(ac, before);
}
