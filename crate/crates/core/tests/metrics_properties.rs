use proptest::prelude::*;
use yawrl_core::metrics::{compare, compute_metrics, yaw_consumption_delta};
use yawrl_core::{Action, CycleRecord, Trace, TurbineParams};

fn trace_from(moves: &[i8], gammas: &[f64], powers: &[f64]) -> Trace {
    let mut theta = 100.0;
    let records = moves
        .iter()
        .zip(gammas.iter().zip(powers))
        .enumerate()
        .map(|(c, (&m, (&g, &p)))| {
            let a = Action::from_code((m + 1) as u8).unwrap();
            if c > 0 {
                theta += 3.0 * a.direction();
            }
            CycleRecord {
                cycle: c,
                t_s: 10 * c as i64,
                phi: 0.0,
                v: 8.0,
                theta,
                gamma: g,
                action_issued: a,
                action_applied: a,
                power_kw: p,
                r1: 0.0,
                r2: 0.0,
            }
        })
        .collect();
    Trace::new(10.0, records)
}

fn parts(n: usize) -> impl Strategy<Value = (Vec<i8>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1i8..=1, n),
        prop::collection::vec(-40.0..40.0f64, n),
        prop::collection::vec(0.0..2000.0f64, n),
    )
}

proptest! {
    #[test]
    fn report_invariants((m, g, p) in parts(60)) {
        let r = compute_metrics(&trace_from(&m, &g, &p), &TurbineParams::default()).unwrap();
        prop_assert!(r.avg_yaw_error_deg >= 0.0 && r.energy_kwh >= 0.0 && r.angle_covered_deg >= 0.0);
        prop_assert!((0.0..=100.0).contains(&r.time_yawing_pct));
        prop_assert!(r.yaw_count <= r.moving_cycles);
    }

    #[test]
    fn metrics_add_over_segments((m, g, p) in parts(80), cut in 1usize..79) {
        let tp = TurbineParams::default();
        let whole = compute_metrics(&trace_from(&m, &g, &p), &tp).unwrap();
        // the second segment's first row carries the motion across the seam
        let a = compute_metrics(&trace_from(&m[..cut], &g[..cut], &p[..cut]), &tp).unwrap();
        let mut m2 = m[cut..].to_vec();
        m2[0] = 0;
        let b = compute_metrics(&trace_from(&m2, &g[cut..], &p[cut..]), &tp).unwrap();
        let seam = (m[cut] != 0) as usize;
        let n = 80.0;
        prop_assert!((whole.avg_yaw_error_deg - (a.avg_yaw_error_deg * cut as f64 + b.avg_yaw_error_deg * (80 - cut) as f64) / n).abs() < 1e-9);
        prop_assert!((whole.energy_kwh - a.energy_kwh - b.energy_kwh).abs() < 1e-9);
        prop_assert!((whole.angle_covered_deg - a.angle_covered_deg - b.angle_covered_deg - 3.0 * seam as f64).abs() < 1e-9);
        prop_assert_eq!(whole.moving_cycles, a.moving_cycles + b.moving_cycles + seam);
        let joined = a.yaw_count + b.yaw_count;
        prop_assert!(whole.yaw_count + 1 >= joined && whole.yaw_count <= joined + 1);
    }

    #[test]
    fn consumption_delta_is_antisymmetric((m1, g, p) in parts(40), m2 in prop::collection::vec(-1i8..=1, 40)) {
        let tp = TurbineParams::default();
        let a = trace_from(&m1, &g, &p);
        let b = trace_from(&m2, &g, &p);
        let ab = yaw_consumption_delta(&a, &b, &tp).unwrap();
        let ba = yaw_consumption_delta(&b, &a, &tp).unwrap();
        for (x, y) in ab.per_cycle_kwh.iter().zip(&ba.per_cycle_kwh) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn net_gain_identity((m1, g1, p1) in parts(40), (m2, g2, p2) in parts(40)) {
        let tp = TurbineParams::default();
        let (a, b) = (trace_from(&m1, &g1, &p1), trace_from(&m2, &g2, &p2));
        let (ra, rb) = (compute_metrics(&a, &tp).unwrap(), compute_metrics(&b, &tp).unwrap());
        prop_assume!(rb.energy_kwh > 0.0 && rb.avg_yaw_error_deg > 0.0);
        let d = yaw_consumption_delta(&a, &b, &tp).unwrap();
        let c = compare(&ra, &rb, &d).unwrap();
        prop_assert!((c.net_energy_gain_pct - (c.energy_gain_pct - 100.0 * d.total_kwh / rb.energy_kwh)).abs() < 1e-12);
        if d.total_kwh > 0.0 {
            prop_assert!(c.net_energy_gain_pct <= c.energy_gain_pct);
        }
        let zero = compare(&ra, &ra, &yaw_consumption_delta(&a, &a, &tp).unwrap()).unwrap();
        prop_assert_eq!((zero.yaw_error_decrease_pct, zero.energy_gain_pct, zero.net_energy_gain_pct), (0.0, 0.0, 0.0));
    }
}
