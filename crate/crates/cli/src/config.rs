//! Run configuration: one TOML document per experiment, with strict keys and
//! a canonical serialized form that is embedded in every report.

use std::path::Path;

use eigenprod_core::{ManifoldModel, Resolution};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Basis,
    Product,
    Decay,
    Truncate,
    LowerBound,
    RemarkS2,
    Greens,
    ExtensionParams,
    Remez,
    Doubling,
    GoodSet,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Basis => "basis",
            Experiment::Product => "product",
            Experiment::Decay => "decay",
            Experiment::Truncate => "truncate",
            Experiment::LowerBound => "lower-bound",
            Experiment::RemarkS2 => "remark-s2",
            Experiment::Greens => "greens",
            Experiment::ExtensionParams => "extension-params",
            Experiment::Remez => "remez",
            Experiment::Doubling => "doubling",
            Experiment::GoodSet => "good-set",
        }
    }

    /// Multiple of `Σλ` used for `lambda_max` when none is given.
    pub fn default_lambda_mult(self) -> f64 {
        match self {
            Experiment::Product | Experiment::Decay | Experiment::Truncate => 6.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max_mult: Option<f64>,
    #[serde(default)]
    pub resolution: Resolution,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c7: Option<f64>,
    /// Product family for `lower-bound`, each entry a list of factor names or ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub products: Option<Vec<Vec<String>>>,
    /// Built-in family: `sphere-rotated` (degrees `k_min..=k_max`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exactness: Option<usize>,
    /// `linear`, `re-power:K`, `mode:NAME` or `lift:NAME`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: String,
    #[serde(default)]
    pub csv: bool,
    #[serde(default)]
    pub svg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<String>,
}

fn default_out() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out(), csv: false, svg: false, cache: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Seed for randomized sampling checks.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub factors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ManifoldModel>,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: eigenprod_core::extension::RESIDUAL_SEED,
            factors: Vec::new(),
            model: None,
            basis: BasisConfig::default(),
            params: Params::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }
}
