use std::fs;
use std::process::Command;

use yawrl_cli::{commands, ExperimentConfig, Options};
use yawrl_core::{compare_traces, Trace, TurbineParams};

const QUIET: Options = Options { quiet: true };

fn config(dir: &std::path::Path, extra: &[&str]) -> ExperimentConfig {
    let mut o = vec![format!("output_dir={:?}", dir.to_string_lossy()), "seeds=[0]".to_string()];
    o.extend(extra.iter().map(|s| s.to_string()));
    ExperimentConfig::load(None, &o).unwrap()
}

#[test]
fn steady_preset_has_21000_rows_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = commands::gen_data(&config(a.path(), &[]), QUIET).unwrap();
    let pb = commands::gen_data(&config(b.path(), &[]), QUIET).unwrap();
    let text = fs::read_to_string(&pa).unwrap();
    assert_eq!(text.lines().count(), 21_001);
    assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
}

#[test]
fn eval_without_checkpoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[]);
    commands::gen_data(&cfg, QUIET).unwrap();
    let err = commands::eval(&cfg, None, QUIET).unwrap_err();
    assert!(format!("{err:#}").contains("checkpoint not found"), "{err:#}");
}

#[test]
fn stages_report_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[]);
    let err = commands::calibrate_cyca(&cfg, QUIET).unwrap_err();
    assert!(format!("{err:#}").contains("dataset not found"));
    let err = commands::compare_runs(&cfg, QUIET).unwrap_err();
    assert!(format!("{err:#}").contains("trace not found"));
}

#[test]
fn short_pipeline_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        &["ppo.total_steps=1024", "ppo.n_steps=512", "data.generator={length_s=6000, dir_mean_deg=30.0, dir_std_deg=8.0, reversion_rate=0.001, speed_mean_ms=8.0, speed_std_ms=1.0, seed=3}"],
    );
    let report = commands::run_all(&cfg, QUIET).unwrap();
    assert_eq!(report.seeds.len(), 1);
    for f in [
        "manifest.json",
        "config.toml",
        "comparison.json",
        "cyca/calibration.json",
        "seed-0/checkpoint.json",
        "seed-0/learning_curve.csv",
        "seed-0/rlyca_trace.csv",
        "seed-0/cyca_s_trace.csv",
        "seed-0/metrics.json",
        "seed-0/summary.txt",
        "seed-0/gains.csv",
        "seed-0/plot_nacelle.csv",
        "seed-0/plot_power_delta.csv",
        "seed-0/plot_yaw_consumption_delta.csv",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let curve = fs::read_to_string(dir.path().join("seed-0/learning_curve.csv")).unwrap();
    assert!(curve.starts_with("update_idx,steps,mean_return,policy_loss,value_loss,entropy\n"));
    assert_eq!(curve.lines().count(), 3);

    let t = Trace::read_csv(&dir.path().join("seed-0/rlyca_trace.csv"), 10.0).unwrap();
    let c = compare_traces(&t, &t, &TurbineParams::default()).unwrap();
    assert_eq!((c.yaw_error_decrease_pct, c.energy_gain_pct, c.net_energy_gain_pct), (0.0, 0.0, 0.0));
}

#[test]
fn binary_rejects_a_bad_generator_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_yawrl"))
        .args(["-q", "--output-dir"])
        .arg(dir.path())
        .args(["--set", "data.generator={length_s=100, dir_mean_deg=30.0, dir_std_deg=-1.0, reversion_rate=0.001, speed_mean_ms=8.0, speed_std_ms=1.0}", "gen-data"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn output_root_env_var_relocates_relative_dirs() {
    let root = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_yawrl"))
        .env(yawrl_cli::config::OUTPUT_ROOT_ENV, root.path())
        .args(["-q", "--set", "output_dir=\"exp\"", "gen-data"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(root.path().join("exp/data/wind.csv").exists());
}
