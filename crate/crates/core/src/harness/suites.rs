//! Bundled experiment configurations.

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

macro_rules! bundled {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../../suites/", $file, ".toml")))),*]
    };
}

const CLASSICAL: &[(&str, &str)] = bundled![
    "harmonic_sanity",
    "equality_flat_boxes",
    "equality_harmonic_pair",
    "equality_double_well",
    "ratio_flat_wells",
    "ratio_double_well_bath",
    "jensen_flat_boxes",
    "jensen_harmonic_pair",
    "jensen_double_well",
];

const QUANTUM: &[(&str, &str)] = bundled!["quantum_ratio_symmetric", "quantum_ratio_broken", "quantum_entropy"];

const BOUNDS: &[(&str, &str)] =
    bundled!["overestimate_valid", "overestimate_violated", "ratio_starved", "equality_beta_sweep"];

const REPLICATOR: &[(&str, &str)] = bundled!["replicator_growth", "replicator_balanced", "replicator_coupling"];

pub const NAMES: [&str; 5] = ["classical-identities", "quantum-identities", "bounds", "replicator", "all"];

fn sources(name: &str) -> Result<Vec<(&'static str, &'static str)>> {
    let groups: Vec<&[(&str, &str)]> = match name {
        "classical-identities" => vec![CLASSICAL],
        "quantum-identities" => vec![QUANTUM],
        "bounds" => vec![BOUNDS],
        "replicator" => vec![REPLICATOR],
        "all" => vec![CLASSICAL, QUANTUM, BOUNDS, REPLICATOR],
        other => return Err(Error::Config(format!("unknown suite `{other}`; expected one of {NAMES:?}"))),
    };
    Ok(groups.into_iter().flatten().copied().collect())
}

/// Parsed configs of a suite, in run order.
pub fn configs(name: &str) -> Result<Vec<ExperimentConfig>> {
    sources(name)?
        .into_iter()
        .map(|(file, text)| ExperimentConfig::parse(text).map_err(|e| Error::Config(format!("bundled `{file}`: {e}"))))
        .collect()
}

/// Raw TOML of a bundled config.
pub fn source(file: &str) -> Option<&'static str> {
    [CLASSICAL, QUANTUM, BOUNDS, REPLICATOR].iter().flat_map(|g| g.iter()).find(|(f, _)| *f == file).map(|(_, t)| *t)
}
