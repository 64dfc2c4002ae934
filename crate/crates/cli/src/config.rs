//! Run configuration: a JSON file overlaid with command-line flags.
//!
//! Every field is optional. A field set on the command line replaces the same
//! field from `--config`; anything still unset falls back to the command's
//! default. Keys follow the long flag names with `-` replaced by `_`.

use std::fs;
use std::path::{Path, PathBuf};

use ltcal::{AssignmentMode, FitOptions, FusionMode};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ts,
    CaTs,
    EsbinTs,
    DualTs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ts => "ts",
            Method::CaTs => "ca-ts",
            Method::EsbinTs => "esbin-ts",
            Method::DualTs => "dual-ts",
        }
    }
}

/// Which split the report command selects alpha on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SelectOn {
    Fit,
    Eval,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // synthetic data
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(rename = "if", skip_serializing_if = "Option::is_none")]
    pub imbalance_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_fraction: Option<f64>,

    // inputs and outputs
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_output: Option<PathBuf>,

    // calibration
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<AssignmentMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select_on: Option<SelectOn>,

    // optimizer
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub armijo: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            context: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// `flags` on top of `self`: every field set in `flags` wins.
    pub fn overlay(&self, flags: &RunConfig) -> RunConfig {
        let mut base = as_object(self);
        base.extend(as_object(flags));
        serde_json::from_value(Value::Object(base)).expect("merging two valid configs")
    }

    pub fn fit_options(&self) -> CliResult<FitOptions> {
        let d = FitOptions::default();
        let opts = FitOptions {
            initial_temperature: self.init_t.unwrap_or(d.initial_temperature),
            gradient_tolerance: self.grad_tol.unwrap_or(d.gradient_tolerance),
            max_iterations: self.max_iter.unwrap_or(d.max_iterations),
            history_size: self.history.unwrap_or(d.history_size),
            sufficient_decrease: self.armijo.unwrap_or(d.sufficient_decrease),
        };
        opts.validate().map_err(|e| match e {
            ltcal::Error::InvalidArgument { name, reason } => {
                let flag = match name {
                    "initial_temperature" => "--init-t",
                    "gradient_tolerance" => "--grad-tol",
                    "max_iterations" => "--max-iter",
                    "history_size" => "--history",
                    "sufficient_decrease" => "--armijo",
                    other => other,
                };
                CliError::usage(format!("{flag}: {reason}"))
            }
            other => other.into(),
        })?;
        Ok(opts)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serialization is infallible")
    }
}

fn as_object(cfg: &RunConfig) -> Map<String, Value> {
    match serde_json::to_value(cfg).expect("config serialization is infallible") {
        Value::Object(map) => map,
        _ => unreachable!("RunConfig serializes to an object"),
    }
}

/// Value of a required field, or a usage error naming its flag.
pub fn require<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value
        .clone()
        .ok_or_else(|| CliError::usage(format!("missing required {flag}")))
}
