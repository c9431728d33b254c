//! Discrete-time yaw-control environment.
//!
//! One step is one control cycle of `p` seconds. The action issued in a cycle
//! reaches the yaw drive one cycle later when the communication delay is
//! enabled; the wind advances to the next cycle before the new misalignment
//! and reward are computed.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::angle::{circular_mean, quantize_heading, wrap_heading, yaw_error};
use crate::error::{Error, Result};
use crate::power::{power_with_misalignment, TurbineParams};
use crate::trace::{CycleRecord, Trace};
use crate::wind::{Standardizer, WindSeries};

/// Yaw command for one control cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Clockwise = 0,
    Stay = 1,
    CounterClockwise = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Clockwise, Action::Stay, Action::CounterClockwise];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// `action - 1`: -1 clockwise, 0 stay, +1 counter-clockwise.
    pub fn direction(self) -> f64 {
        f64::from(self.code()) - 1.0
    }

    pub fn is_moving(self) -> bool {
        self != Action::Stay
    }

    /// Motion that turns the nacelle by `delta` degrees.
    pub fn from_displacement(delta: f64) -> Self {
        if delta > 0.0 {
            Action::CounterClockwise
        } else if delta < 0.0 {
            Action::Clockwise
        } else {
            Action::Stay
        }
    }
}

/// Environment section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Control-cycle period `p`, whole seconds.
    pub cycle_period_s: u32,
    /// Communication delay, either 0 or one cycle period.
    pub comm_delay_s: u32,
    /// Consecutive stationary actions needed for the usage bonus.
    pub k: usize,
    /// Lag depth of the observation.
    pub j: usize,
    /// Weight of the usage bonus.
    pub w: f64,
    /// Episode length in cycles.
    pub episode_len: usize,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self { cycle_period_s: 10, comm_delay_s: 10, k: 2, j: 12, w: 40.0, episode_len: 256 }
    }
}

/// Validated environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub params: EnvParams,
    pub turbine: TurbineParams,
    pub standardizer: Standardizer,
}

impl EnvConfig {
    pub fn new(params: EnvParams, turbine: TurbineParams, standardizer: Standardizer) -> Result<Self> {
        let p = &params;
        if p.cycle_period_s == 0 {
            return Err(Error::Config("cycle_period_s must be positive".into()));
        }
        if p.comm_delay_s != 0 && p.comm_delay_s != p.cycle_period_s {
            return Err(Error::Config(format!(
                "comm_delay_s must be 0 or one cycle ({}), got {}",
                p.cycle_period_s, p.comm_delay_s
            )));
        }
        if p.k == 0 || p.j == 0 || p.episode_len == 0 {
            return Err(Error::Config("k, j and episode_len must be at least 1".into()));
        }
        if !(p.w.is_finite() && p.w >= 0.0) {
            return Err(Error::Config(format!("w = {} must be non-negative", p.w)));
        }
        Ok(Self { params, turbine, standardizer })
    }

    pub fn period_s(&self) -> f64 {
        f64::from(self.params.cycle_period_s)
    }

    pub fn delayed(&self) -> bool {
        self.params.comm_delay_s > 0
    }

    /// Nacelle travel during one moving cycle, `p * r`, on the heading grid.
    pub fn yaw_step(&self) -> f64 {
        (self.period_s() * self.turbine.yaw_rate() / crate::angle::HEADING_QUANTUM).round()
            * crate::angle::HEADING_QUANTUM
    }

    /// Misalignment above which one corrective move beats staying put.
    pub fn indifference_misalignment(&self, v_tilde: f64) -> Result<f64> {
        indifference_misalignment(self.params.w, v_tilde, self.yaw_step())
    }
}

/// Misalignment `g` at which a corrective move of `correction` degrees and
/// the stationary action earn the same one-cycle reward:
/// `-(g - c)^2 v^3 = -g^2 v^3 + w`.
pub fn indifference_misalignment(w: f64, v_tilde: f64, correction: f64) -> Result<f64> {
    if !(v_tilde > 0.0) {
        return Err(Error::Range(format!("standardized speed {v_tilde} must be positive")));
    }
    if !(correction > 0.0) {
        return Err(Error::Range(format!("correction {correction} must be positive")));
    }
    Ok((w / v_tilde.powi(3) + correction * correction) / (2.0 * correction))
}

/// Cycle-mean wind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleWind {
    pub phi: f64,
    pub v: f64,
}

/// Circular-mean direction and arithmetic-mean speed over the samples in
/// `[cycle * p, (cycle + 1) * p)`.
pub fn cycle_wind(series: &WindSeries, cycle: usize, period_s: u32) -> Result<CycleWind> {
    let p = period_s as usize;
    if p == 0 {
        return Err(Error::Config("cycle period must be positive".into()));
    }
    let start = cycle * p;
    let window = series
        .samples()
        .get(start..start + p)
        .ok_or_else(|| Error::Range(format!("cycle {cycle} lies beyond the series ({} samples)", series.len())))?;
    let phi = circular_mean(window.iter().map(|s| s.phi))
        // opposite vanes cancel exactly; fall back to the first reading
        .unwrap_or(window[0].phi);
    let v = window.iter().map(|s| s.v).sum::<f64>() / p as f64;
    Ok(CycleWind { phi, v })
}

/// All complete cycles of a series.
pub fn aggregate_cycles(series: &WindSeries, period_s: u32) -> Result<Vec<CycleWind>> {
    let n = series.len() / period_s.max(1) as usize;
    (0..n).map(|c| cycle_wind(series, c, period_s)).collect()
}

/// One lagged row of the observation: the action issued in the previous
/// cycle next to the misalignment, direction and standardized speed it led to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsRow {
    pub action: Action,
    pub gamma: f64,
    pub phi: f64,
    pub v_tilde: f64,
}

/// `j` rows, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub rows: Vec<ObsRow>,
}

/// How the nacelle is positioned at reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitTheta {
    /// Facing the first cycle's mean wind direction.
    Align,
    /// Absolute heading, degrees.
    Heading(f64),
    /// Heading relative to the first cycle's wind; the first misalignment is
    /// `-offset`.
    Offset(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// Absolute cycle index into the wind series.
    pub cycle: usize,
    pub theta: f64,
    /// Action issued last cycle, applied during this one.
    pub pending: Action,
    pub history: VecDeque<ObsRow>,
    /// The last `k` issued actions, newest last.
    pub issued: VecDeque<Action>,
    pub steps: usize,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub r1: f64,
    pub r2: f64,
    pub done: bool,
    pub info: CycleRecord,
}

/// Yaw environment over one wind series.
#[derive(Debug, Clone)]
pub struct YawEnv {
    cycles: Arc<[CycleWind]>,
    t0: i64,
    cfg: EnvConfig,
    state: Option<SimState>,
}

impl YawEnv {
    pub fn new(series: &WindSeries, cfg: EnvConfig) -> Result<Self> {
        let cycles: Arc<[CycleWind]> = aggregate_cycles(series, cfg.params.cycle_period_s)?.into();
        if cycles.len() < 2 {
            return Err(Error::Range(format!(
                "series of {} samples holds fewer than two {} s cycles",
                series.len(),
                cfg.params.cycle_period_s
            )));
        }
        let t0 = series.samples().first().map_or(0, |s| s.t);
        Ok(Self { cycles, t0, cfg, state: None })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Replaces the configuration, keeping the aggregated wind.
    pub fn with_config(&self, cfg: EnvConfig) -> Result<Self> {
        if cfg.params.cycle_period_s != self.cfg.params.cycle_period_s {
            return Err(Error::Config("cannot change the cycle period of an environment".into()));
        }
        Ok(Self { cycles: Arc::clone(&self.cycles), t0: self.t0, cfg, state: None })
    }

    pub fn n_cycles(&self) -> usize {
        self.cycles.len()
    }

    pub fn cycles(&self) -> &[CycleWind] {
        &self.cycles
    }

    pub fn state(&self) -> Option<&SimState> {
        self.state.as_ref()
    }

    /// Largest start cycle leaving a full episode of wind.
    pub fn max_start(&self) -> Option<usize> {
        self.cycles.len().checked_sub(self.cfg.params.episode_len + 1)
    }

    fn row(&self, cycle: usize, theta: f64, action: Action) -> ObsRow {
        let w = self.cycles[cycle];
        ObsRow {
            action,
            gamma: crate::angle::wrap_signed(w.phi - theta),
            phi: w.phi,
            v_tilde: self.cfg.standardizer.standardize(w.v),
        }
    }

    fn t_s(&self, cycle: usize) -> i64 {
        self.t0 + (cycle as i64) * i64::from(self.cfg.params.cycle_period_s)
    }

    /// Starts an episode at `start_cycle`. The lagged history is filled from
    /// the wind preceding the start with stationary actions, repeating the
    /// first cycle where the series has no earlier data.
    pub fn reset(&mut self, start_cycle: usize, init: InitTheta) -> Result<Observation> {
        let p = &self.cfg.params;
        match self.max_start() {
            Some(max) if start_cycle <= max => {}
            _ => {
                return Err(Error::Range(format!(
                    "start cycle {start_cycle} leaves fewer than {} cycles of wind (series has {})",
                    p.episode_len,
                    self.cycles.len()
                )))
            }
        }
        let phi0 = self.cycles[start_cycle].phi;
        let theta = match init {
            InitTheta::Align => phi0,
            InitTheta::Heading(h) => h,
            InitTheta::Offset(o) => phi0 + o,
        };
        if !theta.is_finite() {
            return Err(Error::Domain(format!("initial heading {theta}")));
        }
        let theta = quantize_heading(theta);
        let history: VecDeque<ObsRow> = (0..p.j)
            .map(|i| self.row(start_cycle.saturating_sub(i), theta, Action::Stay))
            .collect();
        let issued = std::iter::repeat(Action::Stay).take(p.k).collect();
        let state = SimState {
            cycle: start_cycle,
            theta,
            pending: Action::Stay,
            history,
            issued,
            steps: 0,
            done: false,
        };
        let obs = Observation { rows: state.history.iter().copied().collect() };
        self.state = Some(state);
        Ok(obs)
    }

    /// Trace row describing the state right after reset.
    pub fn initial_record(&self) -> Result<CycleRecord> {
        let s = self.state.as_ref().ok_or_else(|| Error::State("environment not reset".into()))?;
        let w = self.cycles[s.cycle];
        let gamma = crate::angle::wrap_signed(w.phi - s.theta);
        Ok(CycleRecord {
            cycle: s.cycle,
            t_s: self.t_s(s.cycle),
            phi: w.phi,
            v: w.v,
            theta: s.theta,
            gamma,
            action_issued: Action::Stay,
            action_applied: Action::Stay,
            power_kw: power_with_misalignment(w.v, gamma, &self.cfg.turbine),
            r1: 0.0,
            r2: 0.0,
        })
    }

    /// Advances one control cycle with `action` as this cycle's decision.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let yaw_step = self.cfg.yaw_step();
        let delayed = self.cfg.delayed();
        let p = self.cfg.params.clone();
        let state = self.state.as_mut().ok_or_else(|| Error::State("environment not reset".into()))?;
        if state.done {
            return Err(Error::State("episode is done; call reset".into()));
        }

        let applied = if delayed { state.pending } else { action };
        let theta = wrap_heading(state.theta + applied.direction() * yaw_step);
        let cycle = state.cycle + 1;
        let wind = self.cycles[cycle];
        let gamma = yaw_error(wind.phi, theta)?;
        let v_tilde = self.cfg.standardizer.standardize(wind.v);
        let r1 = -(gamma * gamma) * v_tilde.powi(3);

        state.issued.push_back(action);
        while state.issued.len() > p.k {
            state.issued.pop_front();
        }
        let r2 = if state.issued.iter().all(|a| *a == Action::Stay) { p.w } else { 0.0 };

        state.pending = action;
        state.theta = theta;
        state.cycle = cycle;
        state.history.push_front(ObsRow { action, gamma, phi: wind.phi, v_tilde });
        state.history.truncate(p.j);
        state.steps += 1;
        state.done = state.steps >= p.episode_len;

        let info = CycleRecord {
            cycle,
            t_s: self.t0 + (cycle as i64) * i64::from(p.cycle_period_s),
            phi: wind.phi,
            v: wind.v,
            theta,
            gamma,
            action_issued: action,
            action_applied: applied,
            power_kw: power_with_misalignment(wind.v, gamma, &self.cfg.turbine),
            r1,
            r2,
        };
        Ok(StepOutcome {
            observation: Observation { rows: state.history.iter().copied().collect() },
            reward: r1 + r2,
            r1,
            r2,
            done: state.done,
            info,
        })
    }

    /// Runs one episode under `policy` and returns its trace, starting with
    /// the reset row.
    pub fn run_episode<F>(&mut self, start_cycle: usize, init: InitTheta, mut policy: F) -> Result<Trace>
    where
        F: FnMut(&Observation) -> Result<Action>,
    {
        let mut obs = self.reset(start_cycle, init)?;
        let mut records = vec![self.initial_record()?];
        loop {
            let action = policy(&obs)?;
            let out = self.step(action)?;
            records.push(out.info);
            obs = out.observation;
            if out.done {
                break;
            }
        }
        Ok(Trace::new(self.cfg.period_s(), records))
    }
}

/// Fills `r1`/`r2` of a trace produced outside the environment (baselines),
/// treating each row's applied motion as the issued action.
pub fn annotate_rewards(trace: &mut Trace, cfg: &EnvConfig) {
    let k = cfg.params.k;
    let mut streak = k; // history before the trace counts as stationary
    for (i, r) in trace.records.iter_mut().enumerate() {
        if i == 0 {
            r.r1 = 0.0;
            r.r2 = 0.0;
            continue;
        }
        let vt = cfg.standardizer.standardize(r.v);
        r.r1 = -(r.gamma * r.gamma) * vt.powi(3);
        streak = if r.action_issued.is_moving() { 0 } else { streak + 1 };
        r.r2 = if streak >= k { cfg.params.w } else { 0.0 };
    }
}
