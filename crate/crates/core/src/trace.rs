//! Per-cycle control traces shared by the simulator, the baselines and the
//! metrics.
//!
//! CSV schema:
//! `cycle,t_s,phi,v,theta,gamma,action_issued,action_applied,power_kw,r1,r2`.
//! Row `c` holds the nacelle position at the start of cycle `c`;
//! `action_applied` is the motion that took the nacelle there from row
//! `c - 1`. The first row of a trace is the initial state and never moves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::Action;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Seconds since the start of the wind series at the cycle start.
    pub t_s: i64,
    /// Cycle-mean wind direction, degrees.
    pub phi: f64,
    /// Cycle-mean wind speed, m/s.
    pub v: f64,
    /// Nacelle position, degrees.
    pub theta: f64,
    /// Yaw misalignment, degrees.
    pub gamma: f64,
    pub action_issued: Action,
    pub action_applied: Action,
    pub power_kw: f64,
    pub r1: f64,
    pub r2: f64,
}

const HEADER: &str = "cycle,t_s,phi,v,theta,gamma,action_issued,action_applied,power_kw,r1,r2";

/// A trace on a uniform cycle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub period_s: f64,
    pub records: Vec<CycleRecord>,
}

impl Trace {
    pub fn new(period_s: f64, records: Vec<CycleRecord>) -> Self {
        Self { period_s, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Nacelle displacement for every row, wrapped into `(-180, 180]`.
    /// Zero for the first row.
    pub fn theta_deltas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.records.len());
        let mut prev: Option<f64> = None;
        for r in &self.records {
            out.push(prev.map_or(0.0, |p| crate::angle::wrap_signed(r.theta - p)));
            prev = Some(r.theta);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.cycle,
                r.t_s,
                r.phi,
                r.v,
                r.theta,
                r.gamma,
                r.action_issued.code(),
                r.action_applied.code(),
                r.power_kw,
                r.r1,
                r.r2
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a trace; the cycle period is recovered from the `t_s` column,
    /// or taken from `fallback_period_s` for single-row traces.
    pub fn read_csv(path: &Path, fallback_period_s: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().from_path(path)?;
        let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != HEADER {
            return Err(Error::Schema(format!("unexpected trace header `{header}`")));
        }
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse { path: path.to_owned(), line, message };
            let f = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|_| bad(format!("bad number `{}`", &rec[i])))
            };
            let action = |i: usize| -> Result<Action> {
                rec[i]
                    .parse::<u8>()
                    .ok()
                    .and_then(Action::from_code)
                    .ok_or_else(|| bad(format!("bad action `{}`", &rec[i])))
            };
            records.push(CycleRecord {
                cycle: rec[0].parse().map_err(|_| bad(format!("bad cycle `{}`", &rec[0])))?,
                t_s: rec[1].parse().map_err(|_| bad(format!("bad time `{}`", &rec[1])))?,
                phi: f(2)?,
                v: f(3)?,
                theta: f(4)?,
                gamma: f(5)?,
                action_issued: action(6)?,
                action_applied: action(7)?,
                power_kw: f(8)?,
                r1: f(9)?,
                r2: f(10)?,
            });
        }
        let period_s = match records.as_slice() {
            [a, b, ..] => (b.t_s - a.t_s) as f64,
            _ => fallback_period_s,
        };
        Ok(Self { period_s, records })
    }

    /// Checks that two traces cover the same cycles.
    pub fn check_same_grid(&self, other: &Trace) -> Result<()> {
        if self.len() != other.len() || self.period_s != other.period_s {
            return Err(Error::Alignment(format!(
                "traces differ: {} rows at {} s vs {} rows at {} s",
                self.len(),
                self.period_s,
                other.len(),
                other.period_s
            )));
        }
        for (a, b) in self.records.iter().zip(&other.records) {
            if a.cycle != b.cycle || a.t_s != b.t_s {
                return Err(Error::Alignment(format!(
                    "cycle {} (t={}) does not match cycle {} (t={})",
                    a.cycle, a.t_s, b.cycle, b.t_s
                )));
            }
        }
        Ok(())
    }
}
