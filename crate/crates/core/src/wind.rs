//! Wind-log time series: CSV ingestion, train/test split, speed
//! standardization and a statistically matched synthetic generator.
//!
//! The CSV schema is `t,phi_deg,v_ms` with one header line, one row per
//! second.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::angle::wrap_heading;
use crate::error::{Error, Result};

/// One-second wind measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindSample {
    /// Seconds since series start.
    pub t: i64,
    /// Wind direction, degrees in `[0, 360)`.
    pub phi: f64,
    /// Wind speed, m/s.
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesSource {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub source: SeriesSource,
    pub label: String,
}

/// Uniformly sampled (1 s) wind series.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    samples: Vec<WindSample>,
    meta: SeriesMeta,
}

impl WindSeries {
    /// Builds a series, checking sample ranges and 1 s spacing.
    pub fn new(samples: Vec<WindSample>, meta: SeriesMeta) -> Result<Self> {
        for s in &samples {
            if !(s.phi.is_finite() && (0.0..360.0).contains(&s.phi)) {
                return Err(Error::Range(format!("phi {} at t={} outside [0, 360)", s.phi, s.t)));
            }
            if !s.v.is_finite() || s.v < 0.0 {
                return Err(Error::Range(format!("wind speed {} at t={} is negative", s.v, s.t)));
            }
        }
        for w in samples.windows(2) {
            if w[1].t != w[0].t + 1 {
                return Err(Error::Schema(format!("non-uniform spacing at t={}", w[1].t)));
            }
        }
        Ok(Self { samples, meta })
    }

    pub fn samples(&self) -> &[WindSample] {
        &self.samples
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_speed(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.v).sum::<f64>() / self.samples.len() as f64
    }

    /// Writes the series in the `t,phi_deg,v_ms` schema.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "t,phi_deg,v_ms")?;
        for s in &self.samples {
            writeln!(out, "{},{},{}", s.t, s.phi, s.v)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a wind log. Directions are normalized into `[0, 360)`.
pub fn load_series(path: &Path) -> Result<WindSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let expected = ["t", "phi_deg", "v_ms"];
    if header.len() != 3 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Schema(format!(
            "expected header `t,phi_deg,v_ms`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut samples = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { path: path.to_owned(), line, message: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { path: path.to_owned(), line, message };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let t: i64 = rec[0].parse().map_err(|_| bad(format!("bad timestamp `{}`", &rec[0])))?;
        let phi: f64 = rec[1].parse().map_err(|_| bad(format!("bad direction `{}`", &rec[1])))?;
        let v: f64 = rec[2].parse().map_err(|_| bad(format!("bad speed `{}`", &rec[2])))?;
        if !phi.is_finite() || !v.is_finite() {
            return Err(bad("non-finite value".into()));
        }
        if v < 0.0 {
            return Err(Error::Range(format!("wind speed {v} at t={t} (line {line}) is negative")));
        }
        samples.push(WindSample { t, phi: wrap_heading(phi), v });
    }
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    WindSeries::new(samples, SeriesMeta { source: SeriesSource::Real, label })
}

/// First `floor(n/2)` samples train, the remainder test.
pub fn split_train_test(series: &WindSeries) -> Result<(WindSeries, WindSeries)> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Range(format!("cannot split a series of {n} samples")));
    }
    let half = n / 2;
    let part = |samples: &[WindSample], suffix: &str| WindSeries {
        samples: samples.to_vec(),
        meta: SeriesMeta {
            source: series.meta.source,
            label: format!("{}-{suffix}", series.meta.label),
        },
    };
    Ok((part(&series.samples[..half], "train"), part(&series.samples[half..], "test")))
}

/// Divides wind speeds by the mean speed of the training split, so the
/// training mean maps to 1 and all values stay non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    scale: f64,
}

impl Standardizer {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Degenerate(format!("standardizer scale {scale} must be positive")));
        }
        Ok(Self { scale })
    }

    pub fn fit(train: &WindSeries) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Degenerate("empty training split".into()));
        }
        Self::new(train.mean_speed())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn standardize(&self, v: f64) -> f64 {
        v / self.scale
    }
}

/// A deterministic wind-direction change added on top of the stochastic
/// process: the offset grows linearly from 0 at `start_s` to `magnitude_deg`
/// at `end_s` and persists afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub start_s: f64,
    pub end_s: f64,
    pub magnitude_deg: f64,
}

impl Ramp {
    fn offset(&self, t: f64) -> f64 {
        self.magnitude_deg * ((t - self.start_s) / (self.end_s - self.start_s)).clamp(0.0, 1.0)
    }
}

/// Parameters of the synthetic wind generator.
///
/// Direction is a mean-reverting (Ornstein-Uhlenbeck) process with per-second
/// jitter and optional ramps; the realized series is then shifted and scaled
/// so its mean and standard deviation equal `dir_mean_deg` / `dir_std_deg`.
/// Speed is an independent mean-reverting process clipped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub length_s: i64,
    pub dir_mean_deg: f64,
    pub dir_std_deg: f64,
    /// Mean-reversion rate of the direction process, 1/s.
    pub reversion_rate: f64,
    /// Standard deviation of the per-second direction jitter relative to the
    /// slow process, before moment matching.
    #[serde(default)]
    pub dir_jitter_deg: f64,
    #[serde(default)]
    pub ramps: Vec<Ramp>,
    pub speed_mean_ms: f64,
    pub speed_std_ms: f64,
    /// Mean-reversion rate of the speed process, 1/s.
    #[serde(default = "default_speed_reversion")]
    pub speed_reversion_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_label")]
    pub label: String,
}

fn default_speed_reversion() -> f64 {
    1.0 / 300.0
}

fn default_label() -> String {
    "synthetic".into()
}

impl GeneratorSpec {
    /// Steady direction around 34.1 deg with a 9.7 deg spread, 21000 s.
    pub fn steady() -> Self {
        Self {
            length_s: 21_000,
            dir_mean_deg: 34.1,
            dir_std_deg: 9.7,
            reversion_rate: 1.0 / 1800.0,
            dir_jitter_deg: 3.0,
            ramps: Vec::new(),
            speed_mean_ms: 8.0,
            speed_std_ms: 1.5,
            speed_reversion_rate: default_speed_reversion(),
            seed: 1,
            label: "steady".into(),
        }
    }

    /// Direction around 41.4 deg with a 11.6 deg spread and two large
    /// direction changes inside [10000, 12500] s and [15000, 20000] s.
    pub fn variable() -> Self {
        Self {
            dir_mean_deg: 41.4,
            dir_std_deg: 11.6,
            ramps: vec![
                Ramp { start_s: 10_000.0, end_s: 12_500.0, magnitude_deg: 35.0 },
                Ramp { start_s: 15_000.0, end_s: 20_000.0, magnitude_deg: -35.0 },
            ],
            label: "variable".into(),
            ..Self::steady()
        }
    }

    /// Constant direction and speed.
    pub fn constant(length_s: i64, dir_deg: f64, speed_ms: f64) -> Self {
        Self {
            length_s,
            dir_mean_deg: dir_deg,
            dir_std_deg: 0.0,
            reversion_rate: 1.0,
            dir_jitter_deg: 0.0,
            ramps: Vec::new(),
            speed_mean_ms: speed_ms,
            speed_std_ms: 0.0,
            speed_reversion_rate: 1.0,
            seed: 0,
            label: "constant".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_s <= 0 {
            return Err(Error::Config(format!("length_s {} must be positive", self.length_s)));
        }
        let finite = [
            self.dir_mean_deg,
            self.dir_std_deg,
            self.reversion_rate,
            self.dir_jitter_deg,
            self.speed_mean_ms,
            self.speed_std_ms,
            self.speed_reversion_rate,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("generator parameters must be finite".into()));
        }
        if self.dir_std_deg < 0.0 || self.speed_std_ms < 0.0 || self.dir_jitter_deg < 0.0 {
            return Err(Error::Config("standard deviations must be non-negative".into()));
        }
        if self.reversion_rate <= 0.0 || self.speed_reversion_rate <= 0.0 {
            return Err(Error::Config("reversion rates must be positive".into()));
        }
        if self.speed_mean_ms < 0.0 {
            return Err(Error::Config("speed_mean_ms must be non-negative".into()));
        }
        for r in &self.ramps {
            if !(r.start_s.is_finite() && r.end_s.is_finite() && r.magnitude_deg.is_finite())
                || r.start_s >= r.end_s
            {
                return Err(Error::Config(format!("invalid ramp {r:?}")));
            }
        }
        Ok(())
    }
}

/// Unit-variance OU path, exactly discretized at 1 s.
fn ou_path(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let decay = (-rate).exp();
    let kick = (1.0 - decay * decay).sqrt();
    let mut x: f64 = StandardNormal.sample(rng);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        let z: f64 = StandardNormal.sample(rng);
        x = decay * x + kick * z;
    }
    out
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Generates a synthetic wind series. Identical `(spec, seed)` pairs give
/// bit-identical series.
pub fn generate_synthetic(spec: &GeneratorSpec, seed: u64) -> Result<WindSeries> {
    spec.validate()?;
    let n = spec.length_s as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let slow = ou_path(&mut rng, n, spec.reversion_rate);
    let mut dir: Vec<f64> = slow
        .iter()
        .enumerate()
        .map(|(t, x)| {
            let jitter: f64 = StandardNormal.sample(&mut rng);
            let ramp: f64 = spec.ramps.iter().map(|r| r.offset(t as f64)).sum();
            spec.dir_std_deg * x + spec.dir_jitter_deg * jitter + ramp
        })
        .collect();

    if spec.dir_std_deg == 0.0 {
        for (t, d) in dir.iter_mut().enumerate() {
            *d = spec.dir_mean_deg + spec.ramps.iter().map(|r| r.offset(t as f64)).sum::<f64>();
        }
    } else {
        let (m, s) = mean_std(&dir);
        for d in &mut dir {
            *d = if s > 0.0 {
                spec.dir_mean_deg + (*d - m) * spec.dir_std_deg / s
            } else {
                spec.dir_mean_deg
            };
        }
    }

    let speed = ou_path(&mut rng, n, spec.speed_reversion_rate);
    let samples = dir
        .iter()
        .zip(&speed)
        .enumerate()
        .map(|(t, (&d, &z))| WindSample {
            t: t as i64,
            phi: wrap_heading(d),
            v: (spec.speed_mean_ms + spec.speed_std_ms * z).max(0.0),
        })
        .collect();
    WindSeries::new(samples, SeriesMeta { source: SeriesSource::Synthetic, label: spec.label.clone() })
}

/// Mean and standard deviation of the directions, measured linearly around
/// `reference` so series near the 0/360 seam are handled.
pub fn direction_stats(series: &WindSeries, reference: f64) -> (f64, f64) {
    let unwrapped: Vec<f64> = series
        .samples()
        .iter()
        .map(|s| reference + crate::angle::wrap_signed(s.phi - reference))
        .collect();
    mean_std(&unwrapped)
}
