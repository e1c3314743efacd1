//! Declarative experiment files (TOML, one experiment per file).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::detbal::{JensenConfig, TransitionConfig};
use crate::dynamics::IntegratorSpec;
use crate::error::{Error, Result};
use crate::model::{BoundaryConfig, ConditioningContext, HamiltonianModel, ModelSpec, PotentialSpec};
use crate::quantum::{InstanceSpec, Spectrum};
use crate::replicator::ReplicatorParams;
use crate::sampling::SamplerConfig;
use crate::states::{Macrostate, ThermoOptions};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Every stochastic component derives its streams from this seed.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Multiplies every numeric pass/fail tolerance of the run.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    HarmonicSanity(HarmonicSanity),
    EntropyEquality(EntropyEquality),
    RatioIdentity(RatioIdentity),
    Jensen(Jensen),
    OverestimateBound(OverestimateBound),
    QuantumRatio(QuantumRatio),
    QuantumEntropy(QuantumEntropy),
    QuantumInstance(QuantumInstance),
    Replicator(Replicator),
    ReplicatorCoupling(ReplicatorCoupling),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::HarmonicSanity(_) => "harmonic_sanity",
            Experiment::EntropyEquality(_) => "entropy_equality",
            Experiment::RatioIdentity(_) => "ratio_identity",
            Experiment::Jensen(_) => "jensen",
            Experiment::OverestimateBound(_) => "overestimate_bound",
            Experiment::QuantumRatio(_) => "quantum_ratio",
            Experiment::QuantumEntropy(_) => "quantum_entropy",
            Experiment::QuantumInstance(_) => "quantum_instance",
            Experiment::Replicator(_) => "replicator",
            Experiment::ReplicatorCoupling(_) => "replicator_coupling",
        }
    }
}

/// Model and boundary configurations (trivial when absent).
pub fn build_system(
    model: &ModelSpec,
    boundaries: &Option<Vec<BoundaryConfig>>,
) -> Result<(HamiltonianModel, ConditioningContext)> {
    let model = HamiltonianModel::from_spec(model)?;
    let ctx = match boundaries {
        Some(b) => ConditioningContext::new(b.clone())?,
        None => ConditioningContext::trivial(),
    };
    Ok((model, ctx))
}

fn unit_harmonic() -> ModelSpec {
    ModelSpec { reaction_mass: 1.0, potential: PotentialSpec::Harmonic { k: 1.0, q0: 0.0 }, bath: vec![] }
}

fn sanity_dt() -> f64 {
    0.01
}

fn sanity_tau() -> f64 {
    5.0
}

fn sanity_long() -> usize {
    100_000
}

fn sanity_record() -> usize {
    10
}

fn sanity_start() -> Vec<f64> {
    vec![1.0, 0.0]
}

fn sanity_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSanity {
    #[serde(default = "unit_harmonic")]
    pub model: ModelSpec,
    #[serde(default = "sanity_dt")]
    pub dt: f64,
    #[serde(default = "sanity_tau")]
    pub tau: f64,
    /// Steps of the long energy-conservation run.
    #[serde(default = "sanity_long")]
    pub long_steps: usize,
    /// Trajectory payload keeps every n-th step.
    #[serde(default = "sanity_record")]
    pub record_every: usize,
    /// `[q..., p...]` of the starting point.
    #[serde(default = "sanity_start")]
    pub start: Vec<f64>,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "sanity_samples")]
    pub canonical_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyEquality {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<BoundaryConfig>>,
    /// Inverse temperatures of the sweep.
    pub betas: Vec<f64>,
    pub macrostate_i: Macrostate,
    pub macrostate_ii: Macrostate,
    #[serde(default)]
    pub thermo: ThermoOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioIdentity {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<BoundaryConfig>>,
    pub energy: f64,
    pub width: f64,
    pub macrostate_i: Macrostate,
    pub macrostate_ii: Macrostate,
    pub tau: f64,
    pub integrator: IntegratorSpec,
    pub transition: TransitionConfig,
    pub volume: SamplerConfig,
    /// Each direction must use at least this many valid trajectories.
    #[serde(default)]
    pub min_trajectories: usize,
    /// Negative control: the run passes only if the verdict is inconclusive.
    #[serde(default)]
    pub expect_inconclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jensen {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<BoundaryConfig>>,
    pub beta: f64,
    pub macrostate_i: Macrostate,
    pub macrostate_ii: Macrostate,
    pub sampler: JensenConfig,
    /// Require the gap interval to exclude 0.
    #[serde(default)]
    pub expect_strict_gap: bool,
    #[serde(default)]
    pub thermo: ThermoOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverestimateBound {
    pub beta: f64,
    pub mean_heat: f64,
    pub delta_s_int: f64,
    pub pi_forward: f64,
    pub pi_star: f64,
    #[serde(default)]
    pub pi_true: Option<f64>,
    /// Negative control: the run passes only if the overestimate contract
    /// is reported as violated.
    #[serde(default)]
    pub expect_violation: bool,
}

fn batch_instances() -> usize {
    100
}

fn batch_d_min() -> usize {
    8
}

fn batch_d_max() -> usize {
    128
}

fn batch_taus() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumRatio {
    pub spectrum: Spectrum,
    #[serde(default = "batch_instances")]
    pub instances: usize,
    #[serde(default = "batch_d_min")]
    pub d_min: usize,
    #[serde(default = "batch_d_max")]
    pub d_max: usize,
    #[serde(default = "batch_taus")]
    pub taus_per_instance: usize,
}

fn entropy_instances() -> usize {
    50
}

fn entropy_d_max() -> usize {
    32
}

fn quantum_beta() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumEntropy {
    #[serde(default = "entropy_instances")]
    pub instances: usize,
    #[serde(default = "batch_d_min")]
    pub d_min: usize,
    #[serde(default = "entropy_d_max")]
    pub d_max: usize,
    #[serde(default = "quantum_beta")]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellWindow {
    pub energy: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumInstance {
    /// The instance seed is replaced by the run seed.
    pub instance: InstanceSpec,
    pub tau: f64,
    #[serde(default = "quantum_beta")]
    pub beta: f64,
    /// Defaults to the whole spectrum.
    #[serde(default)]
    pub shell: Option<ShellWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Replicator {
    pub params: ReplicatorParams,
    pub t_end: f64,
    pub paths: usize,
    /// Defaults to five evenly spaced times ending at `t_end`.
    #[serde(default)]
    pub checkpoints: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorCoupling {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<BoundaryConfig>>,
    pub beta: f64,
    pub macrostate_i: Macrostate,
    pub macrostate_ii: Macrostate,
    /// Irreversibility factors in `(0, 1]`.
    pub factors: Vec<f64>,
    #[serde(default)]
    pub thermo: ThermoOptions,
}

fn check_macrostates(model: &HamiltonianModel, ms: [&Macrostate; 2]) -> Result<()> {
    for m in ms {
        m.validate()?;
        m.check_dim(model.dim())?;
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("{name} must be positive, got {x}")))
    }
}

impl ExperimentConfig {
    /// Parse and validate without running anything.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("experiment `{}`: {other}", cfg.name)),
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        positive("tolerance_scale", self.tolerance_scale)?;
        match &self.experiment {
            Experiment::HarmonicSanity(h) => {
                let model = HamiltonianModel::from_spec(&h.model)?;
                IntegratorSpec::new(h.dt)?;
                positive("tau", h.tau)?;
                positive("beta", h.beta)?;
                if h.start.len() != 2 * model.dim() {
                    return Err(Error::Dimension { expected: 2 * model.dim(), got: h.start.len() });
                }
                if h.record_every == 0 || h.canonical_samples == 0 {
                    return Err(Error::contract("record_every and canonical_samples must be positive"));
                }
            }
            Experiment::EntropyEquality(e) => {
                let (model, _) = build_system(&e.model, &e.boundaries)?;
                check_macrostates(&model, [&e.macrostate_i, &e.macrostate_ii])?;
                if e.betas.is_empty() {
                    return Err(Error::contract("betas must not be empty"));
                }
                for &b in &e.betas {
                    positive("beta", b)?;
                }
            }
            Experiment::RatioIdentity(r) => {
                let (model, _) = build_system(&r.model, &r.boundaries)?;
                check_macrostates(&model, [&r.macrostate_i, &r.macrostate_ii])?;
                positive("width", r.width)?;
                positive("tau", r.tau)?;
                r.integrator.validate()?;
                r.transition.sampler.validate(model.dim())?;
                r.volume.validate(model.dim())?;
            }
            Experiment::Jensen(j) => {
                let (model, _) = build_system(&j.model, &j.boundaries)?;
                check_macrostates(&model, [&j.macrostate_i, &j.macrostate_ii])?;
                positive("beta", j.beta)?;
                j.sampler.outer.validate(model.dim())?;
            }
            Experiment::OverestimateBound(r) => {
                positive("pi_forward", r.pi_forward)?;
            }
            Experiment::QuantumRatio(q) => {
                if q.instances == 0 || q.d_min < 2 || q.d_max < q.d_min || q.d_max > crate::quantum::MAX_DIM {
                    return Err(Error::contract("quantum batch needs instances > 0 and 2 <= d_min <= d_max <= 512"));
                }
            }
            Experiment::QuantumEntropy(q) => {
                if q.instances == 0 || q.d_min < 2 || q.d_max < q.d_min || q.d_max > crate::quantum::MAX_DIM {
                    return Err(Error::contract("quantum batch needs instances > 0 and 2 <= d_min <= d_max <= 512"));
                }
            }
            Experiment::QuantumInstance(q) => {
                let i = &q.instance;
                if i.dimension < 2
                    || i.dimension > crate::quantum::MAX_DIM
                    || i.rank_i == 0
                    || i.rank_ii == 0
                    || i.rank_i + i.rank_ii > i.dimension
                {
                    return Err(Error::contract("instance needs 2 <= d <= 512 and positive ranks that fit"));
                }
            }
            Experiment::Replicator(r) => {
                r.params.validate()?;
                positive("t_end", r.t_end)?;
                if r.paths < 2 {
                    return Err(Error::contract("need at least two paths"));
                }
                if let Some(cps) = &r.checkpoints {
                    if cps.is_empty()
                        || cps.windows(2).any(|w| w[1] < w[0])
                        || cps.iter().any(|&t| !(0.0..=r.t_end).contains(&t))
                    {
                        return Err(Error::contract("checkpoints must be sorted within [0, t_end]"));
                    }
                }
            }
            Experiment::ReplicatorCoupling(c) => {
                let (model, _) = build_system(&c.model, &c.boundaries)?;
                check_macrostates(&model, [&c.macrostate_i, &c.macrostate_ii])?;
                positive("beta", c.beta)?;
                if c.factors.is_empty() || c.factors.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                    return Err(Error::contract("factors must be nonempty and lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "sanity"
seed = 1

[experiment]
kind = "harmonic_sanity"
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.kind(), "harmonic_sanity");
        assert_eq!(cfg.tolerance_scale, 1.0);
        let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_fields_are_named() {
        let text = MINIMAL.replace("kind = \"harmonic_sanity\"", "kind = \"harmonic_sanity\"\nbetta = 2.0");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("betta"), "{err}");
        let top = format!("betta = 1\n{MINIMAL}");
        assert!(ExperimentConfig::parse(&top).unwrap_err().to_string().contains("betta"));
    }

    #[test]
    fn seed_is_mandatory() {
        let err = ExperimentConfig::parse(&MINIMAL.replace("seed = 1", "")).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn semantic_errors_are_config_errors() {
        let text = MINIMAL.replace("kind = \"harmonic_sanity\"", "kind = \"harmonic_sanity\"\ndt = -1.0");
        assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("harmonic_sanity", "no_such_kind");
        assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))));
    }
}
