//! Experiment configuration: one JSON document.
//!
//! ```json
//! {
//!   "operator": "heat",
//!   "dim": 1,
//!   "kernel": "riesz{beta=0.5}",
//!   "grid": { "length": 10.0, "n_x": 128, "n_t": 128 },
//!   "coefficients": { "sigma": "sin_bounded{a=1,b=0.5}", "b": "affine{a=0,b=-1}" },
//!   "target": { "time": 0.5, "x": [5.0] },
//!   "analyses": {
//!     "dalang": {},
//!     "scaling": { "delta_min": 0.001, "delta_max": 0.01, "points": 7 },
//!     "ensemble": { "paths": 1000, "gaussian_check": false, "pbound": [], "kde": true },
//!     "malliavin": { "paths": 100, "r_stride": 4, "eps_grid": [0.001, 0.01] }
//!   },
//!   "options": { "dealias": false, "svg": true, "dump_noise": false, "dump_path": false },
//!   "master_seed": 1,
//!   "output_dir": "out"
//! }
//! ```
//!
//! An analysis runs when its key is present and not null. The time step is
//! `target.time / grid.n_t`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spdelab::Operator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operator: Operator,
    pub dim: usize,
    pub kernel: String,
    pub grid: GridConfig,
    pub coefficients: CoefficientsConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub options: Options,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub n_x: usize,
    pub n_t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub sigma: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub time: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dalang: Option<DalangConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub malliavin: Option<MalliavinConfig>,
}

impl Analyses {
    pub fn any(&self) -> bool {
        self.dalang.is_some()
            || self.scaling.is_some()
            || self.ensemble.is_some()
            || self.malliavin.is_some()
    }

    pub fn uses_solver(&self) -> bool {
        self.ensemble.is_some() || self.malliavin.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DalangConfig {
    /// Radial cutoffs; decades 1 … 10⁶ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_delta_min() -> f64 {
    1e-3
}
fn default_delta_max() -> f64 {
    1e-2
}
fn default_points() -> usize {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub paths: usize,
    #[serde(default)]
    pub gaussian_check: bool,
    /// Moment orders for the L^p bound audit (2 and/or 4).
    #[serde(default)]
    pub pbound: Vec<u32>,
    #[serde(default = "yes")]
    pub kde: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MalliavinConfig {
    pub paths: usize,
    #[serde(default = "default_stride")]
    pub r_stride: usize,
    /// Small-ball thresholds; multiples of the mean γ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
}

fn default_stride() -> usize {
    4
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub dealias: bool,
    #[serde(default)]
    pub svg: bool,
    /// Binary dump of the noise of path 0 (noise.bin).
    #[serde(default)]
    pub dump_noise: bool,
    /// Binary dump of path 0 (path.bin).
    #[serde(default)]
    pub dump_path: bool,
}

#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    Syntax(serde_json::Error),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "cannot read config: {e}"),
            Self::Syntax(e) => write!(f, "config is not a valid experiment document: {e}"),
        }
    }
}

impl std::error::Error for LoadError {}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(LoadError::Io)?;
        Self::from_json(&text).map_err(LoadError::Syntax)
    }

    /// Canonical serialization used for hashing and for the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs always serialize")
    }
}
