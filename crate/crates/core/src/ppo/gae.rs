//! Generalized advantage estimation.

use crate::error::{Error, Result};

/// Returns `(advantages, returns)`. `dones[t]` marks that the transition at
/// `t` ended its episode, so neither the value nor the advantage of step
/// `t + 1` leaks back into it. `bootstrap_value` is the value of the state
/// after the final step.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::LengthMismatch(format!(
            "rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[1.0], &[0.5], &[true], 123.0, 0.99, 0.95).unwrap();
        assert_eq!(a, vec![0.5]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn telescoped_two_steps() {
        let (a, _) = compute_gae(&[0.0, 1.0], &[0.0, 0.0], &[false, false], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![1.0, 1.0]);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let r = [0.3, -1.0, 2.0, 0.5];
        let v = [0.1, 0.4, -0.2, 0.9];
        let d = [false, true, false, false];
        let (a, _) = compute_gae(&r, &v, &d, 0.7, 0.9, 0.0).unwrap();
        let next = [v[1], 0.0, v[3], 0.7];
        for t in 0..4 {
            let live = if d[t] { 0.0 } else { 1.0 };
            assert_eq!(a[t], r[t] + 0.9 * next[t] * live - v[t]);
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_gae(&[1.0, 2.0], &[0.0], &[false, false], 0.0, 0.9, 0.9).is_err());
    }
}
