//! Scenario configuration: JSON with a top-level `kind` selecting the model,
//! a kind-specific `parameters` record, and optional `grid`/`output`
//! settings. Time-dependent coefficients are piecewise-linear breakpoint
//! lists; plain numbers are constants.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use econodyn_core::numcore::constant_fn;
use econodyn_core::TimeFn;

use crate::error::CliError;

pub const DEFAULT_GRID_SEGMENTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Harrod,
    Phillips,
    BalanceCauchy,
    BalanceForecast,
    BalanceSweep,
    Diagnose,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Harrod => "harrod",
            Kind::Phillips => "phillips",
            Kind::BalanceCauchy => "balance-cauchy",
            Kind::BalanceForecast => "balance-forecast",
            Kind::BalanceSweep => "balance-sweep",
            Kind::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: Kind,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub parameters: serde_json::Value,
    /// Sweep variants; may also come from `--variants FILE`.
    #[serde(default)]
    pub variants: Option<Vec<VariantConfig>>,
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn load_variants(path: &Path) -> Result<Vec<VariantConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Parses the kind-specific parameter record.
pub fn parameters<T: serde::de::DeserializeOwned>(file: &ScenarioFile) -> Result<T, CliError> {
    serde_json::from_value(file.parameters.clone())
        .map_err(|e| CliError::Parse(format!("parameters: {e}")))
}

/// A time-dependent coefficient: either a constant or a piecewise-linear
/// breakpoint list `[[t, value], ...]`; evaluation clamps outside the
/// breakpoint range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Constant(f64),
    Breakpoints(Vec<(f64, f64)>),
}

impl Coef {
    pub fn validate(&self, path: &str) -> Result<(), CliError> {
        match self {
            Coef::Constant(v) => {
                if !v.is_finite() {
                    return Err(CliError::invalid(path, "value must be finite"));
                }
            }
            Coef::Breakpoints(points) => {
                if points.is_empty() {
                    return Err(CliError::invalid(path, "breakpoint list must not be empty"));
                }
                for (t, v) in points {
                    if !t.is_finite() || !v.is_finite() {
                        return Err(CliError::invalid(path, "breakpoints must be finite"));
                    }
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(CliError::invalid(
                        path,
                        "breakpoint times must be strictly increasing",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_fn(&self) -> TimeFn {
        match self {
            Coef::Constant(v) => constant_fn(*v),
            Coef::Breakpoints(points) => {
                let points = points.clone();
                std::sync::Arc::new(move |t| {
                    if t <= points[0].0 {
                        return points[0].1;
                    }
                    if t >= points[points.len() - 1].0 {
                        return points[points.len() - 1].1;
                    }
                    let idx = points.partition_point(|(pt, _)| *pt <= t);
                    let (t0, v0) = points[idx - 1];
                    let (t1, v1) = points[idx];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarrodConfig {
    pub m: f64,
    pub n: f64,
    pub y0: f64,
    pub k0: f64,
    /// Right end of the trajectory table; defaults to 90% of the horizon.
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Steps reported for the discrete model.
    #[serde(default = "default_steps")]
    pub steps: u32,
}

fn default_steps() -> u32 {
    20
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhillipsConfig {
    pub k: f64,
    pub n: f64,
    pub m: f64,
    pub l: f64,
    pub y1: f64,
    pub y1p: f64,
    /// Right end of the dimensionless time range; defaults to 3.
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
}

fn default_tau_max() -> f64 {
    3.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceConfig {
    pub a: Vec<Vec<Coef>>,
    pub c: Vec<Coef>,
    #[serde(default = "default_step_length")]
    pub step_length: f64,
    /// Initial prices (all balance kinds).
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    /// Initial price rates (balance-cauchy).
    #[serde(default)]
    pub pp: Option<Vec<f64>>,
    /// Terminal prices (balance-forecast, balance-sweep).
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    /// Characteristic numbers reported by the forecast kinds.
    #[serde(default = "default_criticality_count")]
    pub criticality_count: usize,
    /// Conditioning threshold for diagnose.
    #[serde(default = "default_cond_threshold")]
    pub cond_threshold: f64,
}

fn default_step_length() -> f64 {
    1.0
}

fn default_criticality_count() -> usize {
    5
}

fn default_cond_threshold() -> f64 {
    1e8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    #[serde(default)]
    pub c_delta: Option<Vec<Coef>>,
    #[serde(default)]
    pub r_delta: Option<Vec<f64>>,
}

impl BalanceConfig {
    /// Validates the coefficient table shape and builds the core system.
    pub fn system(&self) -> Result<econodyn_core::balance::BalanceSystem, CliError> {
        let n = self.c.len();
        if n == 0 {
            return Err(CliError::invalid("parameters.c", "needs at least one entry"));
        }
        if self.a.len() != n {
            return Err(CliError::invalid(
                "parameters.a",
                format!("expected {n} rows to match parameters.c, got {}", self.a.len()),
            ));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(CliError::invalid(
                    format!("parameters.a[{i}]"),
                    format!("expected {n} entries, got {}", row.len()),
                ));
            }
            for (j, coef) in row.iter().enumerate() {
                coef.validate(&format!("parameters.a[{i}][{j}]"))?;
            }
        }
        for (i, coef) in self.c.iter().enumerate() {
            coef.validate(&format!("parameters.c[{i}]"))?;
        }
        if !self.step_length.is_finite() || self.step_length <= 0.0 {
            return Err(CliError::invalid(
                "parameters.step_length",
                "must be positive",
            ));
        }
        let coefficients = self
            .a
            .iter()
            .map(|row| row.iter().map(Coef::to_fn).collect())
            .collect();
        let costs = self.c.iter().map(Coef::to_fn).collect();
        econodyn_core::balance::BalanceSystem::new(coefficients, costs, self.step_length)
            .map_err(|e| CliError::invalid("parameters", e.to_string()))
    }

    pub fn prices(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let n = self.c.len();
        let values = match field {
            "p" => self.p.clone(),
            "pp" => self.pp.clone(),
            "r" => self.r.clone(),
            _ => unreachable!("unknown price field"),
        };
        let values = values.ok_or_else(|| {
            CliError::invalid(format!("parameters.{field}"), "required for this kind")
        })?;
        if values.len() != n {
            return Err(CliError::invalid(
                format!("parameters.{field}"),
                format!("expected {n} entries, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::invalid(
                format!("parameters.{field}"),
                "entries must be finite",
            ));
        }
        Ok(values)
    }
}
