//! Conventional yaw control: a cumulative-error threshold controller run on
//! the one-second wind data, and replay of logged nacelle positions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angle::{circular_mean, wrap_heading, wrap_signed, yaw_error};
use crate::env::{aggregate_cycles, annotate_rewards, Action, EnvConfig};
use crate::error::{Error, Result};
use crate::metrics::compute_metrics;
use crate::power::power_with_misalignment;
use crate::trace::{CycleRecord, Trace};
use crate::wind::WindSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycaConfig {
    /// Controller tick, whole seconds.
    pub inner_period_s: u32,
    /// Accumulated |misalignment| that triggers an actuation, deg*s.
    pub threshold_deg_s: f64,
    /// Averaging window for the target heading, seconds.
    pub target_window_s: u32,
    /// Stop yawing once within this many degrees of the target.
    pub stop_deadband_deg: f64,
}

impl Default for CycaConfig {
    fn default() -> Self {
        Self { inner_period_s: 1, threshold_deg_s: 900.0, target_window_s: 30, stop_deadband_deg: 1.0 }
    }
}

impl CycaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_period_s == 0 {
            return Err(Error::Config("inner_period_s must be positive".into()));
        }
        if !(self.threshold_deg_s.is_finite() && self.threshold_deg_s > 0.0) {
            return Err(Error::Config(format!("threshold_deg_s {} must be positive", self.threshold_deg_s)));
        }
        if self.target_window_s < self.inner_period_s {
            return Err(Error::Config("target_window_s must cover at least one tick".into()));
        }
        if !(self.stop_deadband_deg.is_finite() && self.stop_deadband_deg >= 0.0) {
            return Err(Error::Config("stop_deadband_deg must be non-negative".into()));
        }
        Ok(())
    }
}

/// Nacelle heading logged once per second.
#[derive(Debug, Clone, PartialEq)]
pub struct NacelleLog {
    entries: Vec<(i64, f64)>,
}

impl NacelleLog {
    pub fn new(entries: Vec<(i64, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[1].0 != w[0].0 + 1 {
                return Err(Error::Schema(format!("non-uniform spacing at t={}", w[1].0)));
            }
        }
        if let Some((t, th)) = entries.iter().find(|(_, th)| !(th.is_finite() && (0.0..360.0).contains(th))) {
            return Err(Error::Range(format!("theta {th} at t={t} outside [0, 360)")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(i64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a `t,theta_deg` CSV. Headings are normalized into `[0, 360)`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != "t,theta_deg" {
            return Err(Error::Schema(format!("expected header `t,theta_deg`, found `{header}`")));
        }
        let mut entries = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse { path: path.to_owned(), line, message };
            let t: i64 = rec[0].parse().map_err(|_| bad(format!("bad timestamp `{}`", &rec[0])))?;
            let th: f64 = rec[1].parse().map_err(|_| bad(format!("bad heading `{}`", &rec[1])))?;
            if !th.is_finite() {
                return Err(bad("non-finite heading".into()));
            }
            entries.push((t, wrap_heading(th)));
        }
        Self::new(entries)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "t,theta_deg")?;
        for (t, th) in &self.entries {
            writeln!(out, "{t},{th}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Outcome of a simulated conventional-controller run.
#[derive(Debug, Clone, PartialEq)]
pub struct CycaRun {
    /// Per-cycle trace on the environment grid.
    pub trace: Trace,
    /// One-second nacelle positions.
    pub log: NacelleLog,
    /// Seconds (from series start) at which each actuation began.
    pub actuation_starts: Vec<i64>,
}

/// Simulates the threshold controller over the whole series.
///
/// Every tick, while idle, the controller adds `|gamma| * tick` to its
/// accumulator. Once the accumulator reaches the threshold it takes the
/// circular mean of the trailing `target_window_s` of wind direction as the
/// new target, clears the accumulator and yaws toward the target at the yaw
/// rate until within the stop deadband.
pub fn run_cyca_s(series: &WindSeries, cfg: &CycaConfig, env: &EnvConfig, init_theta: f64) -> Result<CycaRun> {
    cfg.validate()?;
    if series.is_empty() {
        return Err(Error::Range("empty wind series".into()));
    }
    if !init_theta.is_finite() {
        return Err(Error::Domain(format!("initial heading {init_theta}")));
    }
    let samples = series.samples();
    let n = samples.len();
    let dt = cfg.inner_period_s as usize;
    let window = cfg.target_window_s as usize;
    let rate = env.turbine.yaw_rate();
    let t0 = samples[0].t;

    let mut theta = crate::angle::quantize_heading(init_theta);
    let mut acc = 0.0;
    let mut target: Option<f64> = None;
    let mut starts = Vec::new();
    let mut thetas = Vec::with_capacity(n);

    let mut s = 0;
    while s < n {
        let tick_end = (s + dt).min(n);
        thetas.extend(std::iter::repeat(theta).take(tick_end - s));
        match target {
            Some(goal) => {
                let err = wrap_signed(goal - theta);
                if err.abs() <= cfg.stop_deadband_deg {
                    target = None;
                } else {
                    let travel = (rate * dt as f64).min(err.abs());
                    theta = wrap_heading(theta + travel.copysign(err));
                }
            }
            None => {
                let gamma = yaw_error(samples[s].phi, theta)?;
                acc += gamma.abs() * dt as f64;
                if acc >= cfg.threshold_deg_s {
                    let lo = tick_end.saturating_sub(window);
                    let goal = circular_mean(samples[lo..tick_end].iter().map(|x| x.phi))
                        .unwrap_or(samples[tick_end - 1].phi);
                    target = Some(goal);
                    acc = 0.0;
                    starts.push(samples[tick_end - 1].t + 1 - t0);
                }
            }
        }
        s = tick_end;
    }

    let log = NacelleLog::new(samples.iter().map(|x| x.t).zip(thetas).collect())?;
    let trace = resample(series, &log, env)?;
    Ok(CycaRun { trace, log, actuation_starts: starts })
}

/// Rebuilds the per-cycle trace of a logged controller. Power is computed
/// like any other trace but reports should not present it: the real
/// turbine's output is affected by factors the simulator ignores.
pub fn replay_cyca_l(series: &WindSeries, log: &NacelleLog, env: &EnvConfig) -> Result<Trace> {
    if log.len() != series.len() {
        return Err(Error::Alignment(format!(
            "nacelle log has {} entries, wind series {}",
            log.len(),
            series.len()
        )));
    }
    if let Some((a, b)) = series.samples().iter().zip(log.entries()).find(|(a, b)| a.t != b.0) {
        return Err(Error::Alignment(format!("wind sample t={} paired with log t={}", a.t, b.0)));
    }
    resample(series, log, env)
}

/// Samples the log at cycle boundaries and scores each cycle.
fn resample(series: &WindSeries, log: &NacelleLog, env: &EnvConfig) -> Result<Trace> {
    let p = env.params.cycle_period_s as usize;
    let cycles = aggregate_cycles(series, env.params.cycle_period_s)?;
    if cycles.is_empty() {
        return Err(Error::Range("series shorter than one control cycle".into()));
    }
    let mut records = Vec::with_capacity(cycles.len());
    let mut prev: Option<f64> = None;
    for (c, w) in cycles.iter().enumerate() {
        let (t, theta) = log.entries()[c * p];
        let gamma = yaw_error(w.phi, theta)?;
        let applied = prev.map_or(Action::Stay, |pt| Action::from_displacement(wrap_signed(theta - pt)));
        records.push(CycleRecord {
            cycle: c,
            t_s: t,
            phi: w.phi,
            v: w.v,
            theta,
            gamma,
            action_issued: applied,
            action_applied: applied,
            power_kw: power_with_misalignment(w.v, gamma, &env.turbine),
            r1: 0.0,
            r2: 0.0,
        });
        prev = Some(theta);
    }
    let mut trace = Trace::new(env.period_s(), records);
    annotate_rewards(&mut trace, env);
    Ok(trace)
}

/// Threshold grid search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: CycaConfig,
    pub target_time_yawing_pct: f64,
    /// `(threshold, time spent yawing %)` for every grid point, ascending.
    pub table: Vec<(f64, f64)>,
}

pub const DEFAULT_THRESHOLD_GRID: [f64; 14] = [
    100.0, 150.0, 200.0, 300.0, 450.0, 600.0, 900.0, 1200.0, 1800.0, 2400.0, 3600.0, 4800.0, 7200.0, 9600.0,
];

/// Picks the threshold whose time spent yawing is closest to `target_pct`.
/// Ties go to the larger threshold.
pub fn calibrate_threshold(
    series: &WindSeries,
    base: &CycaConfig,
    env: &EnvConfig,
    grid: &[f64],
    target_pct: f64,
) -> Result<Calibration> {
    if grid.is_empty() {
        return Err(Error::Config("threshold grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let init = crate::env::cycle_wind(series, 0, env.params.cycle_period_s)?.phi;
    let mut table = Vec::with_capacity(grid.len());
    for &threshold in &grid {
        let cfg = CycaConfig { threshold_deg_s: threshold, ..base.clone() };
        let run = run_cyca_s(series, &cfg, env, init)?;
        let m = compute_metrics(&run.trace, &env.turbine)?;
        table.push((threshold, m.time_yawing_pct));
    }
    let (best, _) = table
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = (a.1 - target_pct).abs();
            let db = (b.1 - target_pct).abs();
            da.total_cmp(&db).then(b.0.total_cmp(&a.0))
        })
        .expect("grid is non-empty");
    Ok(Calibration {
        config: CycaConfig { threshold_deg_s: best, ..base.clone() },
        target_time_yawing_pct: target_pct,
        table,
    })
}
