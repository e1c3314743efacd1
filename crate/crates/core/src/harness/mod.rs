//! Experiment runner: declarative configs in, JSON reports and CSV out.
//!
//! One TOML file describes one experiment. A run validates the file,
//! executes it, and returns a [`RunReport`] carrying the configuration
//! that was actually run, so any report can be re-run from itself.

pub mod config;
pub mod experiments;
pub mod export;
pub mod report;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};

pub use config::{Experiment, ExperimentConfig};
pub use report::{Check, Payload, ReportFile, RunReport, SuiteReport};

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(x) = self.tolerance_scale {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("tolerance scale must be positive, got {x}")));
            }
            cfg.tolerance_scale = x;
        }
        Ok(cfg)
    }
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let start = Instant::now();
    let (checks, payloads) = experiments::execute(cfg);
    let config_hash = report::sha256_hex(&serde_json::to_vec(cfg)?);
    Ok(RunReport {
        name: cfg.name.clone(),
        kind: cfg.experiment.kind().to_string(),
        version: report::VERSION.to_string(),
        config_hash,
        config: cfg.clone(),
        verdict: report::overall(checks.iter().map(|c| c.verdict)),
        checks,
        payloads,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Loads a TOML config, or re-runs the embedded config of a JSON report.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let report: RunReport =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return Ok(report.config);
    }
    ExperimentConfig::parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn run_file(path: &Path, overrides: &Overrides) -> Result<RunReport> {
    let cfg = overrides.apply(load_config(path)?)?;
    run_config(&cfg)
}

pub fn run_suite(name: &str, overrides: &Overrides) -> Result<SuiteReport> {
    let configs = suites::configs(name)?;
    let start = Instant::now();
    let mut runs = Vec::with_capacity(configs.len());
    for cfg in configs {
        runs.push(run_config(&overrides.apply(cfg)?)?);
    }
    Ok(SuiteReport {
        suite: name.to_string(),
        version: report::VERSION.to_string(),
        verdict: report::overall(runs.iter().map(|r| r.verdict)),
        runs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Output directory: command line, then config, then `results`.
pub fn output_dir(cli: Option<&Path>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.map(Path::to_path_buf).or_else(|| cfg.and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("results"))
}

/// One line per check.
pub fn summary_lines(run: &RunReport) -> Vec<String> {
    run.checks
        .iter()
        .map(|c| {
            let tag = match c.verdict {
                crate::detbal::Verdict::Pass => "PASS",
                crate::detbal::Verdict::Fail => "FAIL",
                crate::detbal::Verdict::Inconclusive => "INCONCLUSIVE",
            };
            match &c.detail {
                Some(d) => format!("{tag:<12} {} / {}: {d}", run.name, c.name),
                None => format!("{tag:<12} {} / {}", run.name, c.name),
            }
        })
        .collect()
}

/// 0 when nothing failed, 1 otherwise.
pub fn exit_code(verdict: crate::detbal::Verdict) -> i32 {
    match verdict {
        crate::detbal::Verdict::Fail => 1,
        _ => 0,
    }
}
