//! Regioned power curve and the cosine-exponent misalignment loss.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Turbine description as it appears in an experiment config file.
///
/// Defaults describe a 2 MW, 82 m rotor machine rated at 14 m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineSpec {
    /// Air density, kg/m^3.
    pub rho: f64,
    /// Rotor diameter, m.
    pub rotor_diameter: f64,
    /// Power coefficient. When absent it is calibrated so the cubic law
    /// reaches `p_rated` exactly at `v_rated`.
    pub betz_c: Option<f64>,
    /// Cosine exponent of the misalignment loss.
    pub alpha: f64,
    /// m/s
    pub v_cut_in: f64,
    /// m/s
    pub v_rated: f64,
    /// m/s
    pub v_cut_out: f64,
    /// kW
    pub p_rated: f64,
    /// Nacelle yaw rate, deg/s.
    pub yaw_rate: f64,
    /// Electrical draw of the yaw drive while moving, kW.
    pub p_yaw_drive: f64,
}

impl Default for TurbineSpec {
    fn default() -> Self {
        Self {
            rho: 1.225,
            rotor_diameter: 82.0,
            betz_c: None,
            alpha: 3.0,
            v_cut_in: 3.5,
            v_rated: 14.0,
            v_cut_out: 25.0,
            p_rated: 2000.0,
            yaw_rate: 0.3,
            p_yaw_drive: 18.0,
        }
    }
}

/// Validated turbine constants with the derived swept area and power
/// coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TurbineSpec", into = "TurbineSpec")]
pub struct TurbineParams {
    spec: TurbineSpec,
    area: f64,
    betz_c: f64,
}

impl TurbineParams {
    pub fn new(spec: TurbineSpec) -> Result<Self> {
        let s = &spec;
        let all = [
            s.rho,
            s.rotor_diameter,
            s.alpha,
            s.v_cut_in,
            s.v_rated,
            s.v_cut_out,
            s.p_rated,
            s.yaw_rate,
            s.p_yaw_drive,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("turbine parameters must be finite".into()));
        }
        if !(0.0 < s.v_cut_in && s.v_cut_in < s.v_rated && s.v_rated < s.v_cut_out) {
            return Err(Error::Config(format!(
                "need 0 < v_cut_in < v_rated < v_cut_out, got {} / {} / {}",
                s.v_cut_in, s.v_rated, s.v_cut_out
            )));
        }
        if !(1.7..=5.1).contains(&s.alpha) {
            return Err(Error::Config(format!("alpha {} outside [1.7, 5.1]", s.alpha)));
        }
        if s.rho <= 0.0 || s.rotor_diameter <= 0.0 {
            return Err(Error::Config("rho and rotor_diameter must be positive".into()));
        }
        if s.yaw_rate <= 0.0 || s.p_rated <= 0.0 {
            return Err(Error::Config("yaw_rate and p_rated must be positive".into()));
        }
        if s.p_yaw_drive < 0.0 {
            return Err(Error::Config("p_yaw_drive must be non-negative".into()));
        }
        let area = PI * (s.rotor_diameter / 2.0).powi(2);
        let betz_c = match s.betz_c {
            Some(c) if c > 0.0 && c.is_finite() => c,
            Some(c) => return Err(Error::Config(format!("betz_c {c} must be positive"))),
            None => s.p_rated * 1e3 / (0.5 * s.rho * area * s.v_rated.powi(3)),
        };
        Ok(Self { spec, area, betz_c })
    }

    pub fn spec(&self) -> &TurbineSpec {
        &self.spec
    }

    /// Swept rotor area, m^2.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn betz_c(&self) -> f64 {
        self.betz_c
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn yaw_rate(&self) -> f64 {
        self.spec.yaw_rate
    }

    pub fn p_yaw_drive(&self) -> f64 {
        self.spec.p_yaw_drive
    }

    pub fn p_rated(&self) -> f64 {
        self.spec.p_rated
    }
}

impl Default for TurbineParams {
    fn default() -> Self {
        Self::new(TurbineSpec::default()).expect("default turbine is valid")
    }
}

impl TryFrom<TurbineSpec> for TurbineParams {
    type Error = Error;
    fn try_from(spec: TurbineSpec) -> Result<Self> {
        Self::new(spec)
    }
}

impl From<TurbineParams> for TurbineSpec {
    fn from(tp: TurbineParams) -> Self {
        tp.spec
    }
}

/// Operating region of the power curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerRegion {
    BelowCutIn = 1,
    Partial = 2,
    Rated = 3,
    AboveCutOut = 4,
}

/// Region for wind speed `v`. `v_cut_in` is partial load; `v_rated` and
/// `v_cut_out` belong to the higher region.
pub fn region_of(v: f64, tp: &TurbineParams) -> PowerRegion {
    let s = &tp.spec;
    if v < s.v_cut_in {
        PowerRegion::BelowCutIn
    } else if v < s.v_rated {
        PowerRegion::Partial
    } else if v < s.v_cut_out {
        PowerRegion::Rated
    } else {
        PowerRegion::AboveCutOut
    }
}

/// Power with perfect alignment, kW.
pub fn power_ideal(v: f64, tp: &TurbineParams) -> f64 {
    match region_of(v, tp) {
        PowerRegion::BelowCutIn | PowerRegion::AboveCutOut => 0.0,
        PowerRegion::Partial => 0.5 * tp.spec.rho * tp.area * v.powi(3) * tp.betz_c * 1e-3,
        PowerRegion::Rated => tp.spec.p_rated,
    }
}

/// Multiplicative loss `cos^alpha(gamma)`, clamped to zero past 90 degrees.
pub fn loss_factor(gamma_deg: f64, alpha: f64) -> f64 {
    gamma_deg.to_radians().cos().max(0.0).powf(alpha)
}

/// Power under yaw misalignment `gamma` (degrees), kW. The loss only applies
/// in partial load.
pub fn power_with_misalignment(v: f64, gamma_deg: f64, tp: &TurbineParams) -> f64 {
    let p = power_ideal(v, tp);
    match region_of(v, tp) {
        PowerRegion::Partial => p * loss_factor(gamma_deg, tp.spec.alpha),
        _ => p,
    }
}
