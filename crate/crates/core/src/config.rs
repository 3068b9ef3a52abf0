//! JSON run configuration for `fit` and dataset specification for `synth`.
//!
//! A minimal `fit` config:
//!
//! ```json
//! {
//!   "prior": { "mu0": 7.48, "sigma0_sq": 1.6129 },
//!   "n_subsample": 200,
//!   "seed": 42,
//!   "reference": "ERAi",
//!   "datasets": [
//!     { "label": "ERAi", "path": "erai.csv", "kind": "timeseries" },
//!     { "label": "d01", "path": "d01_grid.csv", "kind": "grid" }
//!   ],
//!   "box": { "lat_min": 59.32, "lat_max": 60.75, "lon_min": 5.05, "lon_max": 7.90 }
//! }
//! ```
//!
//! Omitted fields take the defaults below; `kappa0` and `nu0` default to
//! [`DEFAULT_KAPPA0`] and [`DEFAULT_NU0`]. Relative dataset paths are
//! resolved against the directory holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GeoBox;
use crate::posterior::{Prior, DEFAULT_KAPPA0, DEFAULT_NU0};
use crate::sampler::{DEFAULT_CHUNK_SIZE, DEFAULT_NUM_SAMPLES};

pub const DEFAULT_N_SUBSAMPLE: usize = 200;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_BINS: usize = 50;

/// JSON Schema of the `fit` configuration, shipped with the tool.
pub const RUN_CONFIG_SCHEMA: &str = include_str!("../schema/run_config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mu0: f64,
    #[serde(default = "default_kappa0")]
    pub kappa0: f64,
    #[serde(default = "default_nu0")]
    pub nu0: f64,
    pub sigma0_sq: f64,
}

fn default_kappa0() -> f64 {
    DEFAULT_KAPPA0
}
fn default_nu0() -> f64 {
    DEFAULT_NU0
}

impl PriorConfig {
    pub fn to_prior(self) -> Result<Prior> {
        Prior::new(self.mu0, self.kappa0, self.nu0, self.sigma0_sq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Timeseries,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub label: String,
    pub path: PathBuf,
    #[serde(default = "default_kind")]
    pub kind: DatasetKind,
}

fn default_kind() -> DatasetKind {
    DatasetKind::Timeseries
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub prior: PriorConfig,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub geo_box: Option<GeoBox>,
    /// `(year, month)` pairs to keep; empty keeps every timestep.
    #[serde(default)]
    pub months: Vec<(i32, u32)>,
    #[serde(default = "default_n_subsample")]
    pub n_subsample: usize,
    #[serde(default = "default_num_samples", alias = "S")]
    pub num_samples: usize,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Keep every k-th draw in `joint_<label>.csv`; statistics always use all draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter_thin: Option<usize>,
    #[serde(default)]
    pub lenient: bool,
    #[serde(default)]
    pub gnuplot: bool,
    /// Also write `samples_<label>.csv` with its JSON envelope.
    #[serde(default)]
    pub write_samples: bool,
    /// Manifest timestamp; resolved at run time when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
    pub reference: String,
    pub datasets: Vec<DatasetConfig>,
}

fn default_n_subsample() -> usize {
    DEFAULT_N_SUBSAMPLE
}
fn default_num_samples() -> usize {
    DEFAULT_NUM_SAMPLES
}
fn default_chunk_size() -> usize {
    DEFAULT_CHUNK_SIZE
}
fn default_level() -> f64 {
    DEFAULT_LEVEL
}
fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Labels become file-name components.
pub fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !label.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "label `{label}` must be non-empty and use only ASCII letters, digits, `_`, `-`, `.`"
        )))
    }
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a `manifest.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        let body = match value.get("config") {
            Some(embedded) if value.get("format").is_some() => embedded.clone(),
            _ => value,
        };
        let mut config: RunConfig = serde_json::from_value(body).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut config.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.prior
            .to_prior()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if self.n_subsample < 2 {
            return Err(Error::Config(format!(
                "n_subsample must be at least 2, got {}",
                self.n_subsample
            )));
        }
        if self.num_samples == 0 {
            return Err(Error::Config("num_samples must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::Config("chunk_size must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        if self.scatter_thin == Some(0) {
            return Err(Error::Config("scatter_thin must be at least 1".into()));
        }
        for &(year, month) in &self.months {
            if !(1..=12).contains(&month) {
                return Err(Error::Config(format!(
                    "month filter ({year}, {month}) is not a month"
                )));
            }
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        let mut seen = HashSet::new();
        for d in &self.datasets {
            check_label(&d.label)?;
            if !seen.insert(d.label.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate dataset label `{}`",
                    d.label
                )));
            }
        }
        if !seen.contains(self.reference.as_str()) {
            return Err(Error::Config(format!(
                "reference `{}` is not among the datasets ({})",
                self.reference,
                self.labels().join(", ")
            )));
        }
        if self.datasets.iter().any(|d| d.kind == DatasetKind::Grid) {
            match &self.geo_box {
                None => return Err(Error::Config("grid datasets need a `box`".into())),
                Some(b) => b.validate().map_err(|e| Error::Config(e.to_string()))?,
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.datasets.iter().map(|d| d.label.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDataset {
    pub label: String,
    pub mean: f64,
    pub variance: f64,
    pub steps: usize,
}

/// Seeded Gaussian test series with known mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: String,
    #[serde(default = "default_step_hours")]
    pub step_hours: u32,
    pub datasets: Vec<SynthDataset>,
}

fn default_start() -> String {
    "2008-04-01T00:00:00Z".to_string()
}
fn default_step_hours() -> u32 {
    3
}

impl SynthSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SynthSpec = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if crate::ingest::parse_time(&self.start).is_none() {
            return Err(Error::Config(format!(
                "bad start timestamp `{}`",
                self.start
            )));
        }
        if self.step_hours == 0 {
            return Err(Error::Config("step_hours must be at least 1".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets in synth spec".into()));
        }
        let mut seen = HashSet::new();
        for d in &self.datasets {
            check_label(&d.label)?;
            if !seen.insert(d.label.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate dataset label `{}`",
                    d.label
                )));
            }
            if !d.mean.is_finite() {
                return Err(Error::Config(format!("`{}`: mean must be finite", d.label)));
            }
            if !(d.variance >= 0.0 && d.variance.is_finite()) {
                return Err(Error::Config(format!(
                    "`{}`: variance must be non-negative, got {}",
                    d.label, d.variance
                )));
            }
            if d.steps == 0 {
                return Err(Error::Config(format!(
                    "`{}`: steps must be at least 1",
                    d.label
                )));
            }
        }
        Ok(())
    }
}
