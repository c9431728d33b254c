//! Pipeline stages. Each stage reads only files written by earlier stages
//! under the run directory, plus the config.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use yawrl_core::angle::quantize_heading;
use yawrl_core::env::cycle_wind;
use yawrl_core::metrics::{
    render_gains_csv, render_gains_text, render_summary_csv, render_summary_text, yaw_consumption_delta, ReportColumn,
};
use yawrl_core::ppo::{evaluate, train_with, write_curve_csv, EvalMode};
use yawrl_core::{
    calibrate_threshold, compare, compute_metrics, generate_synthetic, load_series, replay_cyca_l, run_cyca_s,
    split_train_test, Action, Calibration, Checkpoint, Comparison, EnvConfig, InitTheta, MetricsReport,
    NacelleLog, Standardizer, Trace, WindSeries, YawEnv,
};

use crate::config::ExperimentConfig;
use crate::manifest::write_manifest;

pub const WIND_FILE: &str = "data/wind.csv";
pub const NACELLE_FILE: &str = "data/nacelle_log.csv";
pub const CALIBRATION_FILE: &str = "cyca/calibration.json";
pub const COMPARISON_FILE: &str = "comparison.json";

/// Paths inside one run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self { root: cfg.output_dir.clone() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.root.join(format!("seed-{seed}"))
    }

    pub fn checkpoint(&self, seed: u64) -> PathBuf {
        self.seed_dir(seed).join("checkpoint.json")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub quiet: bool,
}

fn note(opts: Options, msg: impl AsRef<str>) {
    if !opts.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str, hint: &str) -> Result<T> {
    if !path.exists() {
        bail!("{what} not found: {} ({hint})", path.display());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Records the resolved config (without its output location) and refreshes
/// the manifest.
fn finish(cfg: &ExperimentConfig) -> Result<()> {
    let mut portable = cfg.clone();
    portable.output_dir = PathBuf::new();
    fs::write(cfg.output_dir.join("config.toml"), toml::to_string(&portable)?)?;
    write_manifest(&cfg.output_dir, cfg)?;
    Ok(())
}

/// Wind data with its split and the environment configuration fitted to
/// the training half.
pub struct Dataset {
    pub full: WindSeries,
    pub train: WindSeries,
    pub test: WindSeries,
    pub env: EnvConfig,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let path = RunLayout::new(cfg).path(WIND_FILE);
    if !path.exists() {
        bail!("dataset not found: {} (run `yawrl gen-data` first)", path.display());
    }
    let full = load_series(&path)?;
    let (train, test) = split_train_test(&full)?;
    let env = EnvConfig::new(cfg.env.clone(), cfg.turbine_params()?, Standardizer::fit(&train)?)?;
    Ok(Dataset { full, train, test, env })
}

/// Writes `data/wind.csv`, generating it or copying a validated log.
pub fn gen_data(cfg: &ExperimentConfig, opts: Options) -> Result<PathBuf> {
    let layout = RunLayout::new(cfg);
    let out = layout.path(WIND_FILE);
    create_parent(&out)?;
    let series = match cfg.data.generator_spec()? {
        Some(spec) => generate_synthetic(&spec, spec.seed)?,
        None => {
            let src = cfg.data.wind_csv.as_ref().expect("csv source when no generator");
            load_series(src).with_context(|| format!("loading {}", src.display()))?
        }
    };
    series.write_csv(&out)?;
    if let Some(log) = &cfg.data.nacelle_log {
        let log = NacelleLog::read_csv(log).with_context(|| format!("loading {}", log.display()))?;
        log.write_csv(&layout.path(NACELLE_FILE))?;
    }
    note(opts, format!("wrote {} ({} samples)", out.display(), series.len()));
    finish(cfg)?;
    Ok(out)
}

pub fn calibrate_cyca(cfg: &ExperimentConfig, opts: Options) -> Result<Calibration> {
    let ds = load_dataset(cfg)?;
    let cal = calibrate_threshold(
        &ds.train,
        &cfg.cyca.config(),
        &ds.env,
        &cfg.cyca.threshold_grid,
        cfg.cyca.target_time_yawing_pct,
    )?;
    write_json(&RunLayout::new(cfg).path(CALIBRATION_FILE), &cal)?;
    note(
        opts,
        format!("threshold {} deg*s (target {}% time yawing)", cal.config.threshold_deg_s, cal.target_time_yawing_pct),
    );
    finish(cfg)?;
    Ok(cal)
}

/// Runs `job` once per configured seed on scoped threads.
fn per_seed<T, F>(cfg: &ExperimentConfig, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.seeds.iter().map(|&seed| s.spawn({ let job = &job; move || job(seed) })).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker thread panicked"))))
            .collect()
    });
    let mut out = Vec::with_capacity(results.len());
    for (seed, r) in cfg.seeds.iter().zip(results) {
        out.push(r.with_context(|| format!("seed {seed}"))?);
    }
    Ok(out)
}

pub fn train(cfg: &ExperimentConfig, opts: Options) -> Result<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let layout = RunLayout::new(cfg);
    let env = YawEnv::new(&ds.train, ds.env.clone())?;
    let paths = per_seed(cfg, |seed| {
        let ppo = yawrl_core::PpoConfig { seed, ..cfg.ppo.clone() };
        let n_updates = ppo.n_updates();
        let out = train_with(&env, &ppo, |p| {
            if (p.update_idx + 1) % 10 == 0 || p.update_idx + 1 == n_updates {
                note(opts, format!("seed {seed}: update {}/{n_updates}, mean return {:.1}", p.update_idx + 1, p.mean_return));
            }
        })?;
        let dir = layout.seed_dir(seed);
        fs::create_dir_all(&dir)?;
        write_curve_csv(&dir.join("learning_curve.csv"), &out.curve)?;
        let path = layout.checkpoint(seed);
        Checkpoint::new(out.model, ds.env.clone(), ppo, out.steps).save(&path)?;
        Ok(path)
    })?;
    finish(cfg)?;
    Ok(paths)
}

/// Metrics of every controller on the test split for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub rlyca: MetricsReport,
    pub cyca_s: MetricsReport,
    pub cyca_l: Option<MetricsReport>,
    /// Nacelle fixed at its initial heading.
    pub no_op: MetricsReport,
}

/// Slice of a full-series nacelle log covering `series`.
fn log_for(log: &NacelleLog, series: &WindSeries) -> Result<NacelleLog> {
    let (t0, t1) = match (series.samples().first(), series.samples().last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => bail!("empty series"),
    };
    Ok(NacelleLog::new(log.entries().iter().copied().filter(|(t, _)| (t0..=t1).contains(t)).collect())?)
}

pub fn eval(cfg: &ExperimentConfig, checkpoint: Option<&Path>, opts: Options) -> Result<Vec<SeedMetrics>> {
    let layout = RunLayout::new(cfg);
    let ckpts: Vec<PathBuf> = cfg.seeds.iter().map(|&s| checkpoint.map_or_else(|| layout.checkpoint(s), Path::to_path_buf)).collect();
    if let Some(missing) = ckpts.iter().find(|p| !p.exists()) {
        bail!("checkpoint not found: {} (run `yawrl train` first)", missing.display());
    }
    let ds = load_dataset(cfg)?;
    let cal: Calibration =
        read_json(&layout.path(CALIBRATION_FILE), "CYCA calibration", "run `yawrl calibrate-cyca` first")?;
    let logged = match layout.path(NACELLE_FILE) {
        p if p.exists() => Some(log_for(&NacelleLog::read_csv(&p)?, &ds.test)?),
        _ => None,
    };
    let tp = ds.env.turbine.clone();
    let test_env = YawEnv::new(&ds.test, ds.env.clone())?;
    let theta0 = quantize_heading(cycle_wind(&ds.test, 0, ds.env.params.cycle_period_s)?.phi);

    let baseline = run_cyca_s(&ds.test, &cal.config, &ds.env, theta0)?;
    let cyca_l = logged.as_ref().map(|log| replay_cyca_l(&ds.test, log, &ds.env)).transpose()?;
    let mut noop_env = test_env.with_config(EnvConfig {
        params: yawrl_core::EnvParams { episode_len: test_env.n_cycles() - 1, ..ds.env.params.clone() },
        ..ds.env.clone()
    })?;
    let no_op = noop_env.run_episode(0, InitTheta::Heading(theta0), |_| Ok(Action::Stay))?;

    let reports = per_seed(cfg, |seed| {
        let idx = cfg.seeds.iter().position(|s| *s == seed).expect("configured seed");
        let ck = Checkpoint::load(&ckpts[idx])?;
        if ck.env != ds.env {
            bail!("checkpoint {} was trained with a different environment", ckpts[idx].display());
        }
        let rl = evaluate(&ck.model, &test_env, EvalMode::Greedy, InitTheta::Heading(theta0))?;
        let dir = layout.seed_dir(seed);
        fs::create_dir_all(&dir)?;
        rl.write_csv(&dir.join("rlyca_trace.csv"))?;
        baseline.trace.write_csv(&dir.join("cyca_s_trace.csv"))?;
        if let Some(t) = &cyca_l {
            t.write_csv(&dir.join("cyca_l_trace.csv"))?;
        }
        let m = SeedMetrics {
            seed,
            rlyca: compute_metrics(&rl, &tp)?,
            cyca_s: compute_metrics(&baseline.trace, &tp)?,
            cyca_l: cyca_l.as_ref().map(|t| compute_metrics(t, &tp)).transpose()?,
            no_op: compute_metrics(&no_op, &tp)?,
        };
        write_json(&dir.join("metrics.json"), &m)?;
        note(
            opts,
            format!(
                "seed {seed}: mean |gamma| RLYCA {:.2}, CYCA-S {:.2}, no-op {:.2}",
                m.rlyca.avg_yaw_error_deg, m.cyca_s.avg_yaw_error_deg, m.no_op.avg_yaw_error_deg
            ),
        );
        Ok(m)
    })?;
    finish(cfg)?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub vs_cyca_s: Comparison,
    pub vs_cyca_l: Option<Comparison>,
}

/// Means of the headline percentages over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: usize,
    pub yaw_error_decrease_pct: f64,
    pub energy_gain_pct: f64,
    pub net_energy_gain_pct: f64,
    pub yaw_consumption_delta_kwh: f64,
    pub yaw_error_decrease_vs_cyca_l_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seeds: Vec<SeedComparison>,
    pub aggregate: Aggregate,
}

fn read_trace(path: &Path, period: f64) -> Result<Trace> {
    if !path.exists() {
        bail!("trace not found: {} (run `yawrl eval` first)", path.display());
    }
    Ok(Trace::read_csv(path, period)?)
}

fn plot_data(dir: &Path, rl: &Trace, base: &Trace, logged: Option<&Trace>, delta: &[f64]) -> Result<()> {
    use std::fmt::Write as _;
    let mut nacelle = String::from("cycle,t_s,phi,theta_rlyca,theta_cyca_s");
    nacelle.push_str(if logged.is_some() { ",theta_cyca_l\n" } else { "\n" });
    let mut power = String::from("cycle,t_s,power_rlyca_kw,power_cyca_s_kw,power_delta_kw\n");
    let mut yaw = String::from("cycle,t_s,yaw_consumption_delta_kwh\n");
    for (i, (a, b)) in rl.records.iter().zip(&base.records).enumerate() {
        let _ = write!(nacelle, "{},{},{},{},{}", a.cycle, a.t_s, a.phi, a.theta, b.theta);
        if let Some(l) = logged {
            let _ = write!(nacelle, ",{}", l.records[i].theta);
        }
        nacelle.push('\n');
        let _ = writeln!(power, "{},{},{},{},{}", a.cycle, a.t_s, a.power_kw, b.power_kw, a.power_kw - b.power_kw);
        let _ = writeln!(yaw, "{},{},{}", a.cycle, a.t_s, delta[i]);
    }
    fs::write(dir.join("plot_nacelle.csv"), nacelle)?;
    fs::write(dir.join("plot_power_delta.csv"), power)?;
    fs::write(dir.join("plot_yaw_consumption_delta.csv"), yaw)?;
    Ok(())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn compare_runs(cfg: &ExperimentConfig, opts: Options) -> Result<ComparisonReport> {
    let layout = RunLayout::new(cfg);
    let tp = cfg.turbine_params()?;
    let period = f64::from(cfg.env.cycle_period_s);
    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    let mut text = String::new();
    for &seed in &cfg.seeds {
        let dir = layout.seed_dir(seed);
        let rl = read_trace(&dir.join("rlyca_trace.csv"), period)?;
        let base = read_trace(&dir.join("cyca_s_trace.csv"), period)?;
        let l_path = dir.join("cyca_l_trace.csv");
        let logged = if l_path.exists() { Some(Trace::read_csv(&l_path, period)?) } else { None };

        let (m_rl, m_base) = (compute_metrics(&rl, &tp)?, compute_metrics(&base, &tp)?);
        let delta = yaw_consumption_delta(&rl, &base, &tp)?;
        let vs_s = compare(&m_rl, &m_base, &delta)?;
        let (m_l, vs_l) = match &logged {
            Some(l) => {
                let m = compute_metrics(l, &tp)?;
                let d = yaw_consumption_delta(&rl, l, &tp)?;
                (Some(m.clone()), Some(compare(&m_rl, &m, &d)?))
            }
            None => (None, None),
        };

        let mut cols = vec![
            ReportColumn { name: "RLYCA", report: &m_rl, show_energy: true },
            ReportColumn { name: "CYCA-S", report: &m_base, show_energy: true },
        ];
        if let Some(m) = &m_l {
            cols.push(ReportColumn { name: "CYCA-L", report: m, show_energy: false });
        }
        let summary = render_summary_text(&cols);
        let gains = render_gains_text(&vs_s, vs_l.as_ref());
        fs::write(dir.join("summary.txt"), &summary)?;
        fs::write(dir.join("summary.csv"), render_summary_csv(&cols))?;
        fs::write(dir.join("gains.txt"), &gains)?;
        fs::write(dir.join("gains.csv"), render_gains_csv(&vs_s, vs_l.as_ref()))?;
        plot_data(&dir, &rl, &base, logged.as_ref(), &delta.per_cycle_kwh)?;
        text.push_str(&format!("seed {seed}\n{summary}\n{gains}\n"));
        seeds.push(SeedComparison { seed, vs_cyca_s: vs_s, vs_cyca_l: vs_l });
    }
    let aggregate = Aggregate {
        seeds: seeds.len(),
        yaw_error_decrease_pct: mean(seeds.iter().map(|s| s.vs_cyca_s.yaw_error_decrease_pct)),
        energy_gain_pct: mean(seeds.iter().map(|s| s.vs_cyca_s.energy_gain_pct)),
        net_energy_gain_pct: mean(seeds.iter().map(|s| s.vs_cyca_s.net_energy_gain_pct)),
        yaw_consumption_delta_kwh: mean(seeds.iter().map(|s| s.vs_cyca_s.yaw_consumption_delta_kwh)),
        yaw_error_decrease_vs_cyca_l_pct: if seeds.iter().all(|s| s.vs_cyca_l.is_some()) {
            Some(mean(seeds.iter().filter_map(|s| s.vs_cyca_l.as_ref()).map(|c| c.yaw_error_decrease_pct)))
        } else {
            None
        },
    };
    text.push_str(&format!(
        "mean over {} seeds: yaw error decrease {:.1}%, energy gain {:.2}%, net energy gain {:.2}%\n",
        aggregate.seeds, aggregate.yaw_error_decrease_pct, aggregate.energy_gain_pct, aggregate.net_energy_gain_pct
    ));
    let report = ComparisonReport { seeds, aggregate };
    write_json(&layout.path(COMPARISON_FILE), &report)?;
    fs::write(layout.path("summary.txt"), &text)?;
    note(opts, text);
    finish(cfg)?;
    Ok(report)
}

/// All stages in order.
pub fn run_all(cfg: &ExperimentConfig, opts: Options) -> Result<ComparisonReport> {
    gen_data(cfg, opts)?;
    calibrate_cyca(cfg, opts)?;
    train(cfg, opts)?;
    eval(cfg, None, opts)?;
    compare_runs(cfg, opts)
}
