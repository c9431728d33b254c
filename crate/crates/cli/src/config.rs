//! Experiment configuration: one TOML file with per-key overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use yawrl_core::cyca::DEFAULT_THRESHOLD_GRID;
use yawrl_core::{CycaConfig, EnvConfig, EnvParams, GeneratorSpec, PpoConfig, Standardizer, TurbineParams, TurbineSpec};

/// Overrides the base directory that relative `output_dir` values resolve
/// against.
pub const OUTPUT_ROOT_ENV: &str = "YAWRL_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub turbine: TurbineSpec,
    #[serde(default)]
    pub env: EnvParams,
    #[serde(default)]
    pub cyca: CycaSection,
    #[serde(default)]
    pub ppo: PpoConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

/// Where the wind data comes from. At most one of `wind_csv` and
/// `generator` may be set; otherwise the named preset is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub wind_csv: Option<PathBuf>,
    /// Logged nacelle headings aligned with `wind_csv`, one per second.
    #[serde(default)]
    pub nacelle_log: Option<PathBuf>,
}

fn default_preset() -> String {
    "steady".into()
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { preset: default_preset(), generator: None, wind_csv: None, nacelle_log: None }
    }
}

impl DataConfig {
    pub fn generator_spec(&self) -> Result<Option<GeneratorSpec>> {
        if self.wind_csv.is_some() {
            if self.generator.is_some() {
                bail!("data.wind_csv and data.generator are mutually exclusive");
            }
            return Ok(None);
        }
        if let Some(g) = &self.generator {
            return Ok(Some(g.clone()));
        }
        match self.preset.as_str() {
            "steady" => Ok(Some(GeneratorSpec::steady())),
            "variable" => Ok(Some(GeneratorSpec::variable())),
            other => bail!("unknown data preset `{other}` (expected `steady` or `variable`)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycaSection {
    pub inner_period_s: u32,
    /// Used as-is until `calibrate-cyca` replaces it.
    pub threshold_deg_s: f64,
    pub target_window_s: u32,
    pub stop_deadband_deg: f64,
    pub threshold_grid: Vec<f64>,
    pub target_time_yawing_pct: f64,
}

impl Default for CycaSection {
    fn default() -> Self {
        let c = CycaConfig::default();
        Self {
            inner_period_s: c.inner_period_s,
            threshold_deg_s: c.threshold_deg_s,
            target_window_s: c.target_window_s,
            stop_deadband_deg: c.stop_deadband_deg,
            threshold_grid: DEFAULT_THRESHOLD_GRID.to_vec(),
            target_time_yawing_pct: 2.0,
        }
    }
}

impl CycaSection {
    pub fn config(&self) -> CycaConfig {
        CycaConfig {
            inner_period_s: self.inner_period_s,
            threshold_deg_s: self.threshold_deg_s,
            target_window_s: self.target_window_s,
            stop_deadband_deg: self.stop_deadband_deg,
        }
    }
}

impl ExperimentConfig {
    /// Reads `path` (or the defaults when `None`) and applies `section.key=value`
    /// overrides. Relative data paths resolve against the config file.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let (mut table, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                (table, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: ExperimentConfig =
            toml::Value::Table(table).try_into().context("config does not match the expected schema")?;
        for p in [&mut cfg.data.wind_csv, &mut cfg.data.nacelle_log].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or(base);
            cfg.output_dir = root.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            bail!("seeds must be distinct");
        }
        if let Some(g) = self.data.generator_spec()? {
            g.validate()?;
        }
        TurbineParams::new(self.turbine.clone())?;
        EnvConfig::new(self.env.clone(), TurbineParams::new(self.turbine.clone())?, Standardizer::new(1.0)?)?;
        self.cyca.config().validate()?;
        self.ppo.validate()?;
        if self.cyca.threshold_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            bail!("cyca.threshold_grid entries must be positive");
        }
        Ok(())
    }

    pub fn turbine_params(&self) -> Result<TurbineParams> {
        Ok(TurbineParams::new(self.turbine.clone())?)
    }

    /// Content hash of everything that affects results (the output location
    /// is excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Sets `a.b.c = value` in a TOML table. The value is parsed as a TOML
/// literal and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .with_context(|| format!("override `{assignment}` is not of the form section.key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_owned()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("bad override key `{key}`");
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().with_context(|| format!("override `{key}`: `{p}` is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}
