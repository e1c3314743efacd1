//! Run reports: verdicts, numeric payloads and the embedded configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detbal::Verdict;
use crate::error::Result;

use super::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    /// The number the verdict was decided on, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, verdict: Verdict) -> Self {
        Check { name: name.into(), verdict, value: None, tolerance: None, detail: None }
    }

    pub fn pass_if(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, Verdict::from_bool(ok))
    }

    /// Passes iff `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { value: Some(value), tolerance: Some(tolerance), ..Self::pass_if(name, value <= tolerance) }
    }

    /// Passes iff `value > threshold`.
    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { value: Some(value), tolerance: Some(threshold), ..Self::pass_if(name, value > threshold) }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Plot-ready data attached to a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// One row per recorded step.
    Trajectory {
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
    },
    /// Densities integrate to 1 over the bins.
    Histogram {
        variable: String,
        bin_width: f64,
        centers: Vec<f64>,
        density: Vec<f64>,
    },
    Population {
        t: Vec<f64>,
        n: Vec<u64>,
    },
    /// Slack of a bound against a swept parameter (ascending).
    BoundSlack {
        parameter: String,
        x: Vec<f64>,
        slack: Vec<f64>,
    },
    /// Numeric detail kept for the record.
    Data {
        value: serde_json::Value,
    },
}

impl Payload {
    /// Name used by `export`.
    pub fn export_name(&self) -> &'static str {
        match self {
            Payload::Trajectory { .. } => "trajectory",
            Payload::Histogram { .. } => "histogram",
            Payload::Population { .. } => "population",
            Payload::BoundSlack { .. } => "bound-slack",
            Payload::Data { .. } => "data",
        }
    }

    pub fn data(value: &impl Serialize) -> Result<Self> {
        Ok(Payload::Data { value: serde_json::to_value(value)? })
    }
}

pub fn overall(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Pass;
    for v in verdicts {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => out = Verdict::Inconclusive,
            Verdict::Pass => {}
        }
    }
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub kind: String,
    pub version: String,
    /// SHA-256 of the JSON form of `config`.
    pub config_hash: String,
    /// The configuration actually run (after command-line overrides).
    pub config: ExperimentConfig,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub payloads: BTreeMap<String, Payload>,
    pub wall_time_s: f64,
}

impl RunReport {
    /// Digest of everything numeric (checks and payloads); equal digests
    /// mean byte-identical numeric output.
    pub fn numeric_digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(&(&self.checks, &self.payloads))?;
        Ok(sha256_hex(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub version: String,
    pub verdict: Verdict,
    pub runs: Vec<RunReport>,
    pub wall_time_s: f64,
}

impl SuiteReport {
    pub fn numeric_digest(&self) -> Result<String> {
        let digests: Vec<String> = self.runs.iter().map(|r| r.numeric_digest()).collect::<Result<_>>()?;
        Ok(sha256_hex(digests.join("\n").as_bytes()))
    }
}

/// Either kind of report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportFile {
    Suite(SuiteReport),
    Run(Box<RunReport>),
}

impl ReportFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn runs(&self) -> Vec<&RunReport> {
        match self {
            ReportFile::Suite(s) => s.runs.iter().collect(),
            ReportFile::Run(r) => vec![r.as_ref()],
        }
    }
}
