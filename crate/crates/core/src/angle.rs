//! Angle arithmetic on compass headings expressed in degrees.
//!
//! Headings live in `[0, 360)`; signed differences live in `(-180, 180]`.

use crate::error::{Error, Result};

/// Resolution of the nacelle heading grid, 2^-20 degrees.
///
/// Nacelle positions are kept on this dyadic grid so that adding a yaw step
/// and wrapping through 360 are exact in floating point.
pub const HEADING_QUANTUM: f64 = 1.0 / 1_048_576.0;

/// Wraps an angle into `(-180, 180]`.
pub fn wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("angle {x}")));
    }
    Ok(wrap_signed(x))
}

/// Infallible variant of [`wrap_angle`] for values already known to be finite.
#[inline]
pub(crate) fn wrap_signed(x: f64) -> f64 {
    // fmod is exact and odd, and both corrections below are exact
    // subtractions, so wrap(-x) == -wrap(x) away from the 180 boundary.
    let r = x % 360.0;
    if r > 180.0 {
        r - 360.0
    } else if r <= -180.0 {
        r + 360.0
    } else {
        r
    }
}

/// Normalizes a heading into `[0, 360)`.
#[inline]
pub fn wrap_heading(x: f64) -> f64 {
    let r = x % 360.0;
    let r = if r < 0.0 { r + 360.0 } else { r };
    // the shift can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Yaw misalignment `phi - theta`, wrapped into `(-180, 180]`.
pub fn yaw_error(phi: f64, theta: f64) -> Result<f64> {
    if !phi.is_finite() || !theta.is_finite() {
        return Err(Error::Domain(format!("phi={phi}, theta={theta}")));
    }
    Ok(wrap_signed(phi - theta))
}

/// Rounds a heading onto the [`HEADING_QUANTUM`] grid.
#[inline]
pub fn quantize_heading(x: f64) -> f64 {
    wrap_heading((x / HEADING_QUANTUM).round() * HEADING_QUANTUM)
}

/// Circular mean of a set of headings, computed from the mean unit vector.
///
/// Returns `None` for an empty input or when the resultant vector vanishes
/// (e.g. two opposite directions).
pub fn circular_mean<I>(headings: I) -> Option<f64>
where
    I: IntoIterator<Item = f64>,
{
    let (mut s, mut c, mut n) = (0.0, 0.0, 0usize);
    for h in headings {
        let r = h.to_radians();
        s += r.sin();
        c += r.cos();
        n += 1;
    }
    if n == 0 || (s.abs() < 1e-12 * n as f64 && c.abs() < 1e-12 * n as f64) {
        return None;
    }
    Some(wrap_heading(s.atan2(c).to_degrees()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert_eq!(wrap_angle(190.0).unwrap(), -170.0);
        assert_eq!(wrap_angle(-540.0).unwrap(), 180.0);
        assert_eq!(wrap_angle(180.0).unwrap(), 180.0);
        assert_eq!(wrap_angle(-180.0).unwrap(), 180.0);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn yaw_error_examples() {
        assert_eq!(yaw_error(34.1, 34.1).unwrap(), 0.0);
        assert!((yaw_error(10.0, 350.0).unwrap() - 20.0).abs() < 1e-12);
        assert!((yaw_error(41.4, 34.1).unwrap() - 7.3).abs() < 1e-12);
        assert!(yaw_error(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn circular_mean_across_wrap() {
        let hs = [350.0, 10.0, 350.0, 10.0, 350.0, 10.0, 350.0, 10.0, 350.0, 10.0];
        let m = circular_mean(hs).unwrap();
        assert!(wrap_signed(m).abs() < 1e-9, "mean {m}");
        assert!(circular_mean(std::iter::empty()).is_none());
        assert!(circular_mean([0.0, 180.0]).is_none());
    }

    #[test]
    fn wrap_heading_never_returns_360() {
        assert_eq!(wrap_heading(-1e-300), 0.0);
        assert_eq!(wrap_heading(360.0), 0.0);
        assert_eq!(wrap_heading(-10.0), 350.0);
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent_and_periodic(x in -1e4f64..1e4, k in -20i32..20) {
            let w = wrap_angle(x).unwrap();
            prop_assert!(w > -180.0 && w <= 180.0);
            prop_assert_eq!(wrap_angle(w).unwrap(), w);
            // x and x + 360k differ only by rounding of the sum
            let shifted = wrap_angle(x + 360.0 * f64::from(k)).unwrap();
            prop_assert!(wrap_signed(shifted - w).abs() < 1e-9);
        }

        #[test]
        fn yaw_error_is_antisymmetric(a in 0.0f64..360.0, b in 0.0f64..360.0) {
            let ab = yaw_error(a, b).unwrap();
            let ba = yaw_error(b, a).unwrap();
            if ab != 180.0 {
                prop_assert_eq!(ab, -ba);
            } else {
                prop_assert_eq!(ba, 180.0);
            }
        }

        #[test]
        fn quantized_heading_steps_are_exact(x in 0.0f64..360.0, n in 0usize..500) {
            let mut th = quantize_heading(x);
            for _ in 0..n {
                let next = wrap_heading(th + 3.0);
                prop_assert_eq!(wrap_signed(next - th), 3.0);
                th = next;
            }
        }
    }
}
