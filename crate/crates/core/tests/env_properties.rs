use proptest::prelude::*;
use yawrl_core::wind::{GeneratorSpec, SeriesMeta, SeriesSource};
use yawrl_core::{
    generate_synthetic, Action, EnvConfig, EnvParams, InitTheta, Standardizer, Trace, TurbineParams, WindSample,
    WindSeries, YawEnv,
};

fn steady_env(delay: bool, len: usize) -> YawEnv {
    let series = generate_synthetic(&GeneratorSpec { length_s: 3000, ..GeneratorSpec::steady() }, 11).unwrap();
    let params = EnvParams { episode_len: len, comm_delay_s: if delay { 10 } else { 0 }, ..EnvParams::default() };
    let cfg = EnvConfig::new(params, TurbineParams::default(), Standardizer::fit(&series).unwrap()).unwrap();
    YawEnv::new(&series, cfg).unwrap()
}

fn replay(env: &mut YawEnv, start: usize, init: InitTheta, actions: &[Action]) -> Trace {
    let mut it = actions.iter().copied();
    env.run_episode(start, init, |_| Ok(it.next().unwrap_or(Action::Stay))).unwrap()
}

fn action() -> impl Strategy<Value = Action> {
    prop::sample::select(Action::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heading_moves_in_exact_steps(actions in prop::collection::vec(action(), 40), off in -60.0..60.0f64) {
        let mut env = steady_env(true, 40);
        let t = replay(&mut env, 5, InitTheta::Offset(off), &actions);
        for d in t.theta_deltas() {
            prop_assert!(d == 0.0 || d == 3.0 || d == -3.0, "step {d}");
        }
    }

    #[test]
    fn delay_shifts_effects_by_one_cycle(actions in prop::collection::vec(action(), 30)) {
        let mut delayed = steady_env(true, 31);
        let mut direct = steady_env(false, 31);
        let a = replay(&mut delayed, 0, InitTheta::Align, &actions);
        let mut shifted = vec![Action::Stay];
        shifted.extend_from_slice(&actions);
        let b = replay(&mut direct, 0, InitTheta::Align, &shifted);
        for c in 0..=31 {
            prop_assert_eq!(a.records[c].theta, b.records[c].theta);
        }
    }

    #[test]
    fn identical_inputs_give_identical_traces(actions in prop::collection::vec(action(), 50), start in 0usize..100) {
        let mut e1 = steady_env(true, 50);
        let mut e2 = steady_env(true, 50);
        let a = replay(&mut e1, start, InitTheta::Offset(7.5), &actions);
        let b = replay(&mut e2, start, InitTheta::Offset(7.5), &actions);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn usage_bonus_requires_k_stays(actions in prop::collection::vec(action(), 30)) {
        let mut env = steady_env(true, 30);
        env.reset(0, InitTheta::Align).unwrap();
        let mut recent = vec![Action::Stay, Action::Stay];
        for a in actions {
            let out = env.step(a).unwrap();
            recent.push(a);
            let n = recent.len();
            let earned = recent[n - 2..].iter().all(|x| *x == Action::Stay);
            prop_assert_eq!(out.r2, if earned { 40.0 } else { 0.0 });
            prop_assert!(out.r1 <= 0.0);
        }
    }
}

#[test]
fn observation_rows_are_newest_first() {
    let samples = (0..600).map(|t| WindSample { t, phi: 10.0 + (t / 10) as f64, v: 8.0 }).collect();
    let series = WindSeries::new(samples, SeriesMeta { source: SeriesSource::Synthetic, label: "ramp".into() }).unwrap();
    let cfg = EnvConfig::new(
        EnvParams { j: 3, episode_len: 20, ..EnvParams::default() },
        TurbineParams::default(),
        Standardizer::new(8.0).unwrap(),
    )
    .unwrap();
    let mut env = YawEnv::new(&series, cfg).unwrap();
    env.reset(5, InitTheta::Heading(15.0)).unwrap();
    let obs = env.step(Action::Clockwise).unwrap().observation;
    let phis: Vec<f64> = obs.rows.iter().map(|r| r.phi.round()).collect();
    assert_eq!(phis, vec![16.0, 15.0, 14.0]);
    assert_eq!(obs.rows[0].action, Action::Clockwise);
    assert_eq!(obs.rows[1].action, Action::Stay);
}
