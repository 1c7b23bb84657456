//! Configuration-driven runs: parse a JSON config, execute the requested
//! checks against one catalog target and produce a versioned report.

mod catalog;
mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::euler_family::ConstraintLog;
use crate::fields::{ConvergenceOutcome, Grid, ResidualReport};
use crate::flow::EvalPath;
use crate::{Error, Result};

pub use catalog::{catalog, CatalogItem};
pub use run::{run_converge, run_verify};

/// Report schema version.
pub const SCHEMA: u32 = 1;
/// Default tolerance for exact-derivative checks.
pub const DEFAULT_TOL: f64 = 1e-10;

fn default_t() -> f64 {
    0.5
}

fn default_accuracy() -> usize {
    2
}

/// One run: a catalog target, its parameters, a grid and the checks to perform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: String,
    /// Target-specific parameters; `null` selects the target's defaults
    /// (a seeded random instance for the Euler families).
    #[serde(default)]
    pub params: serde_json::Value,
    pub grid: Grid,
    /// Evaluation time for time-dependent targets.
    #[serde(default = "default_t")]
    pub t: f64,
    /// Empty means the target's default checks.
    #[serde(default)]
    pub checks: Vec<String>,
    /// Derivative path for `verify`; `converge` always uses finite differences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<EvalPath>,
    /// Stencil accuracy for finite-difference runs.
    #[serde(default = "default_accuracy")]
    pub accuracy: usize,
    /// Per-check tolerances overriding the defaults.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Points per axis for each refinement level (`converge`).
    #[serde(default)]
    pub refinement: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    /// Parses and validates a config; errors carry line/column or field names.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rejects unknown targets and check names.
    pub fn validate(&self) -> Result<()> {
        let item = catalog::lookup(&self.target)?;
        for (i, c) in self.checks.iter().enumerate() {
            if !item.checks.contains(&c.as_str()) {
                return Err(Error::config(
                    format!("checks[{i}]"),
                    format!(
                        "unknown check `{c}` for target {}; available: {}",
                        self.target,
                        item.checks.join(", ")
                    ),
                ));
            }
        }
        if ![2, 4].contains(&self.accuracy) {
            return Err(Error::config("accuracy", "stencil accuracy must be 2 or 4"));
        }
        if let Some(dims) = item.dims {
            if self.grid.dims() != dims {
                return Err(Error::config(
                    "grid",
                    format!(
                        "target {} needs a {dims}-dimensional grid, got {}",
                        self.target,
                        self.grid.dims()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Applies `name=value` tolerance overrides.
    pub fn apply_tol_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (name, value) = o
                .split_once('=')
                .ok_or_else(|| Error::config("--tol", format!("expected name=value, got `{o}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config("--tol", format!("`{value}` is not a number")))?;
            self.tolerances.insert(name.trim().to_string(), v);
        }
        Ok(())
    }

    fn checks(&self) -> Vec<String> {
        if self.checks.is_empty() {
            catalog::lookup(&self.target)
                .map(|i| i.default_checks.iter().map(|s| s.to_string()).collect())
                .unwrap_or_default()
        } else {
            self.checks.clone()
        }
    }

    fn tol(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub tol: f64,
    /// The quantity compared against `tol`.
    pub value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<ResidualReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl CheckResult {
    fn from_reports(name: &str, tol: f64, reports: Vec<ResidualReport>) -> CheckResult {
        let value = reports.iter().fold(0.0f64, |m, r| m.max(r.linf));
        CheckResult {
            name: name.into(),
            pass: value <= tol,
            tol,
            value,
            reports,
            error: None,
            details: None,
        }
    }

    fn failed(name: &str, tol: f64, err: &Error) -> CheckResult {
        CheckResult {
            name: name.into(),
            pass: false,
            tol,
            value: f64::NAN,
            reports: Vec::new(),
            error: Some(err.to_string()),
            details: None,
        }
    }

    fn with_details(mut self, d: serde_json::Value) -> CheckResult {
        self.details = Some(d);
        self
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: usize,
    pub h: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub check: String,
    pub levels: Vec<Level>,
    pub outcome: ConvergenceOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_order: Option<f64>,
    pub order_tol: f64,
    pub pass: bool,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintLog>,
    pub checks: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub convergence: Vec<ConvergenceEntry>,
    /// Conventions that affect the numbers, such as kernel normalization.
    #[serde(default)]
    pub flags: BTreeMap<String, String>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Residual-vs-h table: one row per check and level.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["check", "n", "h", "linf", "order"]).map_err(io)?;
        if self.convergence.is_empty() {
            for c in &self.checks {
                let h = c.reports.first().map(|r| r.grid_h).unwrap_or(f64::NAN);
                out.write_record([
                    c.name.clone(),
                    String::new(),
                    h.to_string(),
                    c.value.to_string(),
                    String::new(),
                ])
                .map_err(io)?;
            }
        }
        for e in &self.convergence {
            let order = e
                .outcome
                .slope()
                .map(|s| s.to_string())
                .unwrap_or_else(|| "saturated".into());
            for l in &e.levels {
                out.write_record([
                    e.check.clone(),
                    l.n.to_string(),
                    l.h.to_string(),
                    l.linf.to_string(),
                    order.clone(),
                ])
                .map_err(io)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
