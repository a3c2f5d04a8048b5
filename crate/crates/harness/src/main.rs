use clap::Parser;
use singlegap::ensembles::{Backend, EnsembleKind};
use singlegap::gaudin::GapLawTable;
use singlegap_harness::config::{Experiment, ExperimentConfig};
use singlegap_harness::error::{HarnessError, Result};
use singlegap_harness::experiments;
use singlegap_harness::report::emit_report;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Run one experiment and write `report.csv`, `report.json` and `config.txt`.
#[derive(Debug, Parser)]
#[command(name = "singlegap", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gap lengths in local units, comma separated.
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ensemble: Option<Vec<EnsembleKind>>,
    #[arg(long)]
    backend: Option<Backend>,
    /// 1-based eigenvalue index.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, toml::Value)>> {
        let mut o = vec![];
        let mut put = |k: &str, v: Result<toml::Value>| -> Result<()> {
            o.push((k.to_string(), v?));
            Ok(())
        };
        fn val<T: serde::Serialize>(v: &T) -> Result<toml::Value> {
            toml::Value::try_from(v).map_err(|e| HarnessError::Config(e.to_string()))
        }
        if let Some(v) = &self.n {
            put("n", val(v))?;
        }
        if let Some(v) = self.samples {
            put("samples", val(&v))?;
        }
        if let Some(v) = self.seed {
            put("seed", val(&v))?;
        }
        if let Some(v) = &self.s_grid {
            put("s_grid", val(v))?;
        }
        if let Some(v) = &self.ensemble {
            put("ensemble", val(v))?;
        }
        if let Some(v) = &self.backend {
            put("backend", val(v))?;
        }
        if let Some(v) = self.index {
            put("index", val(&v))?;
        }
        if let Some(v) = self.u {
            put("u", val(&v))?;
        }
        if let Some(v) = self.x {
            put("x", val(&v))?;
        }
        if let Some(v) = self.quad_order {
            put("quad_order", val(&v))?;
        }
        if let Some(v) = &self.out {
            put("out", val(v))?;
        }
        Ok(o)
    }
}

/// Reuses `gaudin_table.csv` in `dir` when it matches the configured grid.
fn cached_table(cfg: &ExperimentConfig, dir: &Path) -> Result<GapLawTable> {
    let path = dir.join("gaudin_table.csv");
    if let Ok(t) = GapLawTable::read_csv(&path) {
        if (t.step - cfg.gaudin_step).abs() < 1e-12 && (t.s_max() - cfg.gaudin_s_max).abs() < 1e-9 {
            return Ok(t);
        }
    }
    let t = experiments::build_gaudin_table(cfg)?;
    t.write_csv(&path)?;
    Ok(t)
}

fn execute(cli: &Cli, out: &mut Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::resolve(cli.experiment, cli.config.as_deref(), &cli.overrides()?)?;
    *out = Some(cfg.out.clone());
    std::fs::create_dir_all(&cfg.out)?;
    cfg.write_resolved(cfg.out.join("config.txt"))?;
    let report = match cfg.experiment {
        Experiment::GaudinTable => {
            let (report, fred, pain) = experiments::run_gaudin_table(&cfg)?;
            fred.write_csv(cfg.out.join("gaudin_table.csv"))?;
            pain.write_csv(cfg.out.join("gaudin_table_painleve.csv"))?;
            report
        }
        Experiment::SingleGap | Experiment::AveragedGap => {
            let table = cached_table(&cfg, &cfg.out)?;
            experiments::run(&cfg, Some(&table))?
        }
        _ => experiments::run(&cfg, None)?,
    };
    let (csv, json) = emit_report(&report, &cfg.out)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    println!("{}\n{}", csv.display(), json.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = cli.out.clone();
    match execute(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::to_string(&e.record()).expect("error record serializes");
            eprintln!("{record}");
            if let Some(dir) = out {
                let _ = std::fs::write(dir.join("error.json"), &record);
            }
            ExitCode::from(if matches!(e, HarnessError::Config(_)) { 2 } else { 1 })
        }
    }
}
