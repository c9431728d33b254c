//! Alignment, energy and yaw-usage metrics over per-cycle traces, and the
//! candidate-vs-baseline comparison including yaw-drive consumption.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::TurbineParams;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cycles: usize,
    /// Mean |gamma| over all cycles, degrees.
    pub avg_yaw_error_deg: f64,
    /// Rectangle-rule energy at cycle resolution, kWh.
    pub energy_kwh: f64,
    /// Total nacelle travel, degrees.
    pub angle_covered_deg: f64,
    /// Maximal runs of consecutive moving cycles.
    pub yaw_count: usize,
    pub moving_cycles: usize,
    pub time_yawing_pct: f64,
    /// Energy drawn by the yaw drive, kWh.
    pub yaw_consumption_kwh: f64,
}

pub fn compute_metrics(trace: &Trace, tp: &TurbineParams) -> Result<MetricsReport> {
    if trace.is_empty() {
        return Err(Error::Range("cannot score an empty trace".into()));
    }
    let n = trace.len();
    let p = trace.period_s;
    let deltas = trace.theta_deltas();

    let avg_yaw_error_deg = trace.records.iter().map(|r| r.gamma.abs()).sum::<f64>() / n as f64;
    let energy_kwh = trace.records.iter().map(|r| r.power_kw).sum::<f64>() * p / 3600.0;
    let angle_covered_deg: f64 = deltas.iter().map(|d| d.abs()).sum();

    let mut moving_cycles = 0;
    let mut yaw_count = 0;
    let mut was_moving = false;
    for d in &deltas {
        let moving = *d != 0.0;
        if moving {
            moving_cycles += 1;
            if !was_moving {
                yaw_count += 1;
            }
        }
        was_moving = moving;
    }

    Ok(MetricsReport {
        cycles: n,
        avg_yaw_error_deg,
        energy_kwh,
        angle_covered_deg,
        yaw_count,
        moving_cycles,
        time_yawing_pct: 100.0 * moving_cycles as f64 / n as f64,
        yaw_consumption_kwh: angle_covered_deg / tp.yaw_rate() * tp.p_yaw_drive() / 3600.0,
    })
}

/// Per-cycle difference in yaw-drive energy between two controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YawConsumptionDelta {
    /// kWh per cycle, candidate minus baseline.
    pub per_cycle_kwh: Vec<f64>,
    pub total_kwh: f64,
}

/// Extra yaw-drive energy of `candidate` over `baseline`: the travel
/// difference divided by the yaw rate is the extra drive time, charged at
/// the drive's power draw.
pub fn yaw_consumption_delta(candidate: &Trace, baseline: &Trace, tp: &TurbineParams) -> Result<YawConsumptionDelta> {
    candidate.check_same_grid(baseline)?;
    let per_cycle_kwh: Vec<f64> = candidate
        .theta_deltas()
        .iter()
        .zip(baseline.theta_deltas())
        .map(|(c, b)| (c.abs() - b.abs()) / tp.yaw_rate() * tp.p_yaw_drive() / 3600.0)
        .collect();
    let total_kwh = per_cycle_kwh.iter().sum();
    Ok(YawConsumptionDelta { per_cycle_kwh, total_kwh })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub yaw_error_decrease_pct: f64,
    pub energy_gain_pct: f64,
    pub net_energy_gain_pct: f64,
    pub yaw_consumption_delta_kwh: f64,
    pub delta_per_cycle_kwh: Vec<f64>,
}

pub fn compare(candidate: &MetricsReport, baseline: &MetricsReport, delta: &YawConsumptionDelta) -> Result<Comparison> {
    if candidate.cycles != baseline.cycles {
        return Err(Error::Alignment(format!(
            "reports cover {} and {} cycles",
            candidate.cycles, baseline.cycles
        )));
    }
    if baseline.energy_kwh == 0.0 {
        return Err(Error::Degenerate("baseline produced no energy; gains are undefined".into()));
    }
    let yaw_error_decrease_pct = match (baseline.avg_yaw_error_deg, candidate.avg_yaw_error_deg) {
        (b, c) if b == c => 0.0,
        (b, _) if b == 0.0 => {
            return Err(Error::Degenerate("baseline has zero yaw error; decrease is undefined".into()))
        }
        (b, c) => 100.0 * (b - c) / b,
    };
    let (ec, eb) = (candidate.energy_kwh, baseline.energy_kwh);
    Ok(Comparison {
        yaw_error_decrease_pct,
        energy_gain_pct: 100.0 * (ec - eb) / eb,
        net_energy_gain_pct: 100.0 * (ec - eb - delta.total_kwh) / eb,
        yaw_consumption_delta_kwh: delta.total_kwh,
        delta_per_cycle_kwh: delta.per_cycle_kwh.clone(),
    })
}

/// Scores two traces on the same grid and compares them.
pub fn compare_traces(candidate: &Trace, baseline: &Trace, tp: &TurbineParams) -> Result<Comparison> {
    let delta = yaw_consumption_delta(candidate, baseline, tp)?;
    compare(&compute_metrics(candidate, tp)?, &compute_metrics(baseline, tp)?, &delta)
}

/// One column of the controller summary table.
pub struct ReportColumn<'a> {
    pub name: &'a str,
    pub report: &'a MetricsReport,
    /// Logged controllers do not get a power figure.
    pub show_energy: bool,
}

const SUMMARY_ROWS: [&str; 5] = [
    "average yaw error (deg)",
    "power output (kWh)",
    "angle covered (deg)",
    "yaw count",
    "time spent yawing (%)",
];

fn summary_cells(col: &ReportColumn<'_>) -> [String; 5] {
    let r = col.report;
    [
        format!("{:.2}", r.avg_yaw_error_deg),
        if col.show_energy { format!("{:.1}", r.energy_kwh) } else { String::new() },
        format!("{:.1}", r.angle_covered_deg),
        r.yaw_count.to_string(),
        format!("{:.1}", r.time_yawing_pct),
    ]
}

/// Side-by-side controller summary as aligned text.
pub fn render_summary_text(columns: &[ReportColumn<'_>]) -> String {
    let label_w = SUMMARY_ROWS.iter().map(|s| s.len()).max().unwrap_or(0);
    let cells: Vec<[String; 5]> = columns.iter().map(summary_cells).collect();
    let col_w: Vec<usize> = columns
        .iter()
        .zip(&cells)
        .map(|(c, cs)| cs.iter().map(String::len).chain([c.name.len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "");
    for (c, w) in columns.iter().zip(&col_w) {
        let _ = write!(out, "  {:>w$}", c.name);
    }
    out.push('\n');
    for (i, label) in SUMMARY_ROWS.iter().enumerate() {
        let _ = write!(out, "{label:label_w$}");
        for (cs, w) in cells.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", cs[i]);
        }
        out.push('\n');
    }
    out
}

/// Same table as CSV, one row per metric.
pub fn render_summary_csv(columns: &[ReportColumn<'_>]) -> String {
    let mut out = String::from("metric");
    for c in columns {
        out.push(',');
        out.push_str(c.name);
    }
    out.push('\n');
    let cells: Vec<[String; 5]> = columns.iter().map(summary_cells).collect();
    for (i, label) in SUMMARY_ROWS.iter().enumerate() {
        out.push_str(label);
        for cs in &cells {
            out.push(',');
            out.push_str(&cs[i]);
        }
        out.push('\n');
    }
    out
}

/// Gains of a candidate over the simulated baseline, with the yaw-error
/// decrease against the logged baseline in parentheses when available.
pub fn render_gains_text(vs_sim: &Comparison, vs_log: Option<&Comparison>) -> String {
    let decrease = match vs_log {
        Some(l) => format!("{:.1} ({:.1})", vs_sim.yaw_error_decrease_pct, l.yaw_error_decrease_pct),
        None => format!("{:.1}", vs_sim.yaw_error_decrease_pct),
    };
    let rows = [
        ("average yaw error decrease (%)", decrease),
        ("energy gain (%)", format!("{:.2}", vs_sim.energy_gain_pct)),
        ("net energy gain (%)", format!("{:.2}", vs_sim.net_energy_gain_pct)),
    ];
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:w$}  {v}\n")).collect()
}

pub fn render_gains_csv(vs_sim: &Comparison, vs_log: Option<&Comparison>) -> String {
    let log_dec = vs_log.map_or(String::new(), |l| l.yaw_error_decrease_pct.to_string());
    format!(
        "metric,vs_simulated,vs_logged\naverage yaw error decrease (%),{},{}\nenergy gain (%),{},\nnet energy gain (%),{},\n",
        vs_sim.yaw_error_decrease_pct, log_dec, vs_sim.energy_gain_pct, vs_sim.net_energy_gain_pct
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Action;
    use crate::trace::CycleRecord;

    fn trace(thetas: &[f64], gamma: f64, power: f64) -> Trace {
        let records = thetas
            .iter()
            .enumerate()
            .map(|(c, &theta)| CycleRecord {
                cycle: c,
                t_s: 10 * c as i64,
                phi: 0.0,
                v: 8.0,
                theta,
                gamma,
                action_issued: Action::Stay,
                action_applied: Action::Stay,
                power_kw: power,
                r1: 0.0,
                r2: 0.0,
            })
            .collect();
        Trace::new(10.0, records)
    }

    #[test]
    fn stationary_trace_has_no_usage() {
        let m = compute_metrics(&trace(&[5.0; 20], 2.0, 360.0), &TurbineParams::default()).unwrap();
        assert_eq!(m.angle_covered_deg, 0.0);
        assert_eq!(m.yaw_count, 0);
        assert_eq!(m.time_yawing_pct, 0.0);
        assert_eq!(m.avg_yaw_error_deg, 2.0);
        assert!((m.energy_kwh - 20.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_moves_count_separately() {
        // 34 single-cycle moves of 3 degrees spread over 1000 cycles
        let mut thetas = Vec::with_capacity(1000);
        let mut th = 0.0;
        for c in 0..1000 {
            if c % 29 == 5 && c / 29 < 34 {
                th += 3.0;
            }
            thetas.push(th);
        }
        let m = compute_metrics(&trace(&thetas, 1.0, 100.0), &TurbineParams::default()).unwrap();
        assert_eq!(m.yaw_count, 34);
        assert!((m.time_yawing_pct - 3.4).abs() < 1e-12);
    }

    #[test]
    fn one_long_move() {
        let thetas = [0.0, 0.0, 3.0, 6.0, 9.0, 9.0];
        let m = compute_metrics(&trace(&thetas, 1.0, 100.0), &TurbineParams::default()).unwrap();
        assert_eq!(m.angle_covered_deg, 9.0);
        assert_eq!(m.yaw_count, 1);
        assert_eq!(m.moving_cycles, 3);
        // 30 s at 18 kW
        assert!((m.yaw_consumption_kwh - 0.15).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(compute_metrics(&Trace::new(10.0, vec![]), &TurbineParams::default()).is_err());
    }

    #[test]
    fn consumption_delta_examples() {
        let tp = TurbineParams::default();
        let cand = trace(&[0.0, 3.0, 3.0], 0.0, 1.0);
        let base = trace(&[0.0, 0.0, 0.0], 0.0, 1.0);
        let d = yaw_consumption_delta(&cand, &base, &tp).unwrap();
        assert!((d.per_cycle_kwh[1] - 0.05).abs() < 1e-15);
        assert!((d.total_kwh - 0.05).abs() < 1e-15);

        let same = yaw_consumption_delta(&cand, &cand, &tp).unwrap();
        assert!(same.per_cycle_kwh.iter().all(|x| *x == 0.0));

        let credit = yaw_consumption_delta(&base, &cand, &tp).unwrap();
        assert!(credit.per_cycle_kwh[1] < 0.0);

        let short = trace(&[0.0, 0.0], 0.0, 1.0);
        assert!(matches!(yaw_consumption_delta(&cand, &short, &tp), Err(Error::Alignment(_))));
    }

    fn report(err: f64, energy: f64) -> MetricsReport {
        MetricsReport {
            cycles: 10,
            avg_yaw_error_deg: err,
            energy_kwh: energy,
            angle_covered_deg: 0.0,
            yaw_count: 0,
            moving_cycles: 0,
            time_yawing_pct: 0.0,
            yaw_consumption_kwh: 0.0,
        }
    }

    fn delta(total: f64) -> YawConsumptionDelta {
        YawConsumptionDelta { per_cycle_kwh: vec![], total_kwh: total }
    }

    #[test]
    fn comparison_examples() {
        let a = report(6.52, 1168.5);
        let zero = compare(&a, &a, &delta(0.0)).unwrap();
        assert_eq!((zero.yaw_error_decrease_pct, zero.energy_gain_pct, zero.net_energy_gain_pct), (0.0, 0.0, 0.0));

        let c = compare(&report(6.18, 1.0), &report(6.52, 1.0), &delta(0.0)).unwrap();
        assert!(c.yaw_error_decrease_pct > 5.2 && c.yaw_error_decrease_pct < 5.5);

        let c = compare(&report(1.0, 741.5), &report(1.0, 736.0), &delta(3.0)).unwrap();
        assert!((c.energy_gain_pct - 0.747).abs() < 1e-3);
        let identity = c.energy_gain_pct - 100.0 * 3.0 / 736.0;
        assert!((c.net_energy_gain_pct - identity).abs() < 1e-12);

        assert!(matches!(compare(&a, &report(6.52, 0.0), &delta(0.0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn summary_tables_render() {
        let a = report(6.18, 1173.1);
        let b = report(6.52, 1168.5);
        let cols = [
            ReportColumn { name: "RLYCA", report: &a, show_energy: true },
            ReportColumn { name: "CYCA-L", report: &b, show_energy: false },
        ];
        let txt = render_summary_text(&cols);
        assert!(txt.contains("6.18") && txt.contains("1173.1") && !txt.contains("1168.5"));
        let csv = render_summary_csv(&cols);
        assert!(csv.starts_with("metric,RLYCA,CYCA-L\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
