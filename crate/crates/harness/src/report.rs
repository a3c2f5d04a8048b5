//! Result tables: one CSV row per cell, and a JSON document with full provenance.

use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One reported statistic. Exact (kernel-space) cells have `samples = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub metric: String,
    pub ensemble: String,
    pub n: usize,
    /// Experiment-specific coordinate: `s`, `x`, truncation `L`, ...
    pub param: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub value: f64,
    pub reference: Option<f64>,
    /// Companion value such as a p-value or a standard error.
    pub secondary: Option<f64>,
}

pub const CSV_HEADER: [&str; 9] = ["metric", "ensemble", "n", "param", "samples", "seed", "value", "reference", "secondary"];

impl Cell {
    pub fn new(metric: &str, ensemble: &str, n: usize, samples: usize, seed: u64, value: f64) -> Self {
        Self {
            metric: metric.to_string(),
            ensemble: ensemble.to_string(),
            n,
            param: None,
            samples,
            seed,
            value,
            reference: None,
            secondary: None,
        }
    }

    pub fn param(mut self, p: f64) -> Self {
        self.param = Some(p);
        self
    }

    pub fn reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn secondary(mut self, s: f64) -> Self {
        self.secondary = Some(s);
        self
    }
}

/// Raw per-sample values behind a set of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub ensemble: String,
    pub n: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub provenance: Provenance,
    pub cells: Vec<Cell>,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, config_hash: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            provenance: Provenance {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config_hash: config_hash.to_string(),
            },
            cells: vec![],
            series: vec![],
            notes: vec![],
        }
    }

    pub fn push(&mut self, cell: Cell) {
        self.cells.push(cell);
    }

    /// Cells matching `metric` (and `n`, when given), in insertion order.
    pub fn find<'a>(&'a self, metric: &'a str, n: Option<usize>) -> impl Iterator<Item = &'a Cell> + 'a {
        self.cells.iter().filter(move |c| c.metric == metric && n.is_none_or(|n| c.n == n))
    }

    fn check_finite(&self) -> Result<()> {
        for c in &self.cells {
            let all = [Some(c.value), c.param, c.reference, c.secondary];
            if all.iter().flatten().any(|v| !v.is_finite()) {
                return Err(HarnessError::NonFinite(c.metric.clone()));
            }
        }
        for s in &self.series {
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(HarnessError::NonFinite(s.name.clone()));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        w.write_record(CSV_HEADER)?;
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}

/// Writes `report.csv` and `report.json` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    report.check_finite()?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("report.csv");
    let json = dir.join("report.json");
    report.write_csv(&csv)?;
    report.write_json(&json)?;
    Ok((csv, json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentReport::new("x", 1, "h");
        let (csv, _) = emit_report(&r, dir.path()).unwrap();
        let text = std::fs::read_to_string(csv).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = ExperimentReport::new("x", 3, "abc");
        r.push(Cell::new("ks", "gue", 400, 10, 3, 0.1 + 0.2).reference(1.0 / 3.0).secondary(2f64.sqrt()));
        r.push(Cell::new("mean", "gue", 400, 10, 3, 1e-300).param(std::f64::consts::PI));
        r.series.push(Series { name: "x".into(), ensemble: "gue".into(), n: 400, seed: 3, values: vec![0.1, 1.0 / 7.0] });
        let (_, json) = emit_report(&r, dir.path()).unwrap();
        assert_eq!(ExperimentReport::read_json(json).unwrap(), r);
    }

    #[test]
    fn non_finite_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = ExperimentReport::new("x", 3, "abc");
        r.push(Cell::new("bad", "gue", 8, 1, 3, f64::NAN));
        assert!(matches!(emit_report(&r, dir.path()), Err(HarnessError::NonFinite(_))));
    }
}
