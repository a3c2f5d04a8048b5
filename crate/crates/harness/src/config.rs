//! Experiment configuration: a flat `key = value` file (TOML syntax), layered
//! under command-line overrides, with a stable content hash.

use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use singlegap::ensembles::{Backend, EnsembleKind};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SingleGap,
    AveragedGap,
    Gustavsson,
    Independence,
    GapEnergy,
    KernelConvergence,
    GaudinTable,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::SingleGap => "single-gap",
            Experiment::AveragedGap => "averaged-gap",
            Experiment::Gustavsson => "gustavsson",
            Experiment::Independence => "independence",
            Experiment::GapEnergy => "gap-energy",
            Experiment::KernelConvergence => "kernel-convergence",
            Experiment::GaudinTable => "gaudin-table",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Matrix dimensions, one report row group each.
    pub n: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub s_grid: Vec<f64>,
    pub ensemble: Vec<EnsembleKind>,
    /// Backend for GUE samples; the matched ensemble is always dense.
    pub backend: Backend,
    /// 1-based eigenvalue index; defaults to `n / 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    /// Bulk energy for experiments at a fixed energy.
    pub u: f64,
    /// Left end of the gap window, in local units.
    pub x: f64,
    /// Window exponents `a` in `t_n = (log n)^a`.
    pub t_exponents: Vec<f64>,
    /// Truncation half-widths for whole-line integrals.
    pub truncations: Vec<f64>,
    /// Starting Nyström order for determinants; node count for the resolvent.
    pub quad_order: usize,
    pub gaudin_s_max: f64,
    pub gaudin_step: f64,
    /// Largest `n` for which exact kernel-space companions are computed.
    pub exact_max_n: usize,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            n: vec![100, 400],
            samples: 20_000,
            seed: 20_100_517,
            s_grid: vec![1.0],
            ensemble: vec![EnsembleKind::Gue],
            backend: Backend::Tridiagonal,
            index: None,
            u: 0.0,
            x: 0.0,
            t_exponents: vec![0.6],
            truncations: vec![20.0, 40.0, 80.0],
            quad_order: 400,
            gaudin_s_max: singlegap::gaudin::DEFAULT_S_MAX,
            gaudin_step: singlegap::gaudin::DEFAULT_STEP,
            exact_max_n: 1000,
            out: PathBuf::from("out"),
        };
        match experiment {
            Experiment::SingleGap => {}
            Experiment::AveragedGap => {
                c.n = vec![400];
                c.samples = 500;
                c.s_grid = vec![0.5, 1.0, 2.0];
                c.t_exponents = vec![0.6, 0.9];
            }
            Experiment::Gustavsson => {
                c.n = vec![200, 1000];
                c.samples = 10_000;
            }
            Experiment::Independence => {
                c.n = vec![50, 100, 200];
                c.samples = 1;
                c.exact_max_n = 200;
            }
            Experiment::GapEnergy => {
                c.n = vec![200];
                c.samples = 4000;
            }
            Experiment::KernelConvergence => {
                c.n = vec![50, 100, 200, 400];
                c.samples = 1;
            }
            Experiment::GaudinTable => {
                c.n = vec![];
                c.samples = 1;
                c.s_grid = vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0];
            }
        }
        c
    }

    /// Defaults for `experiment`, then the keys present in `file`, then `overrides`
    /// (TOML fragments such as `samples = 10`).
    pub fn resolve(experiment: Experiment, file: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let base = toml::Value::try_from(Self::defaults(experiment)).map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut table = match base {
            toml::Value::Table(t) => t,
            _ => unreachable!("config serializes to a table"),
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            let parsed: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
            if let Some(v) = parsed.get("experiment") {
                if v.as_str() != Some(&experiment.to_string()) {
                    return Err(HarnessError::Config(format!(
                        "config file is for experiment {v}, but {experiment} was requested"
                    )));
                }
            }
            table.extend(parsed);
        }
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.samples < 1 {
            return bad("samples must be at least 1".into());
        }
        if self.experiment != Experiment::GaudinTable && self.n.is_empty() {
            return bad("at least one n is required".into());
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < 8) {
            return bad(format!("n must be at least 8, got {n}"));
        }
        if self.s_grid.is_empty() || self.s_grid.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("s grid must be nonempty with positive entries".into());
        }
        if self.ensemble.is_empty() {
            return bad("at least one ensemble is required".into());
        }
        if !(self.u.abs() < 2.0) {
            return bad(format!("bulk energy must satisfy |u| < 2, got {}", self.u));
        }
        if let Some(i) = self.index {
            if let Some(&n) = self.n.iter().find(|&&n| i == 0 || i >= n) {
                return bad(format!("index {i} out of range for n = {n}"));
            }
        }
        if self.t_exponents.is_empty() || self.t_exponents.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return bad("window exponents must lie in (0, 1)".into());
        }
        if self.truncations.is_empty() || self.truncations.iter().any(|&l| !(l > 0.0)) {
            return bad("truncations must be positive".into());
        }
        if self.quad_order < 16 {
            return bad("quadrature order must be at least 16".into());
        }
        if !(self.gaudin_step > 0.0 && self.gaudin_s_max >= 4.0 * self.gaudin_step) {
            return bad("Gaudin grid needs step > 0 and at least four steps".into());
        }
        if self.experiment == Experiment::Independence {
            if let Some(&n) = self.n.iter().find(|&&n| n > self.exact_max_n) {
                return bad(format!("independence is exact in kernel space; n = {n} exceeds exact_max_n = {}", self.exact_max_n));
            }
        }
        Ok(())
    }

    /// Eigenvalue index used at dimension `n`.
    pub fn index_for(&self, n: usize) -> usize {
        self.index.unwrap_or(n / 2)
    }

    /// SHA-256 over the canonical JSON form of every field.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_text(&self) -> Result<String> {
        let body = toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(format!("# config hash {}\n{body}", self.hash()))
    }

    pub fn write_resolved(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }
}

/// `t_n = (log n)^a`.
pub fn window_half_width(n: usize, exponent: f64) -> f64 {
    (n as f64).ln().powf(exponent)
}
