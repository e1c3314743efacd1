//! Transition probabilities from trajectory ensembles and the
//! detailed-balance relations built on them.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, IntegratorSpec};
use crate::error::{Error, Result};
use crate::model::{time_reverse, BoundaryConfig, ConditioningContext, HamiltonianModel, Modifier};
use crate::rng;
use crate::sampling::{self, EnsembleKind, EnsembleSpec, SampleBatch, SamplerConfig, VolumeRatio};
use crate::states::{self, Macrostate, Region, ThermoOptions, ThermoReport};
use crate::stats::{self, Estimate, Interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `beta <dQ> + ln(pi_rev / pi_fwd) + dS_int >= 0`
    DetailedBalance,
    /// `beta dq + ds_int >= ln(g / delta)`
    GrowthBound,
    /// The detailed-balance bound with an overestimated reverse probability.
    OverestimatedReverse,
    /// `ln(Z_I / Z_II) = -dS_int - beta <dQ>`
    EntropyEquality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`
    pub slack: f64,
    /// Propagated error (or tolerance) on the slack.
    pub error: f64,
    pub satisfied: bool,
    pub inputs: BTreeMap<String, f64>,
    /// `slack +- error`
    pub interval: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    /// Inequality `lhs >= rhs` up to `error`.
    pub fn inequality(relation: Relation, lhs: f64, rhs: f64, error: f64, inputs: BTreeMap<String, f64>) -> Self {
        let slack = lhs - rhs;
        BoundReport {
            relation,
            lhs,
            rhs,
            slack,
            error,
            satisfied: slack >= -error,
            inputs,
            interval: Interval::new(slack - error, slack + error),
            note: None,
        }
    }

    /// Equality `lhs == rhs` up to `error`.
    pub fn equality(relation: Relation, lhs: f64, rhs: f64, error: f64, inputs: BTreeMap<String, f64>) -> Self {
        let mut r = Self::inequality(relation, lhs, rhs, error, inputs);
        r.satisfied = r.slack.abs() <= error;
        r
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_bool(self.satisfied)
    }
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// How initial conditions are drawn and what is diagnosed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    /// Sampler for the restricted shell; one trajectory per sample.
    pub sampler: SamplerConfig,
    /// Size of the reference sample of the destination used for the
    /// arrival diagnostic (0 skips it).
    #[serde(default)]
    pub reference_samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_min_arrivals")]
    pub min_arrivals: usize,
    /// Re-evolve every hit backwards and count returns to the origin.
    #[serde(default)]
    pub check_reversal: bool,
}

fn default_bins() -> usize {
    16
}

fn default_min_arrivals() -> usize {
    30
}

impl TransitionConfig {
    pub fn new(sampler: SamplerConfig) -> Self {
        TransitionConfig {
            sampler,
            reference_samples: 0,
            bins: default_bins(),
            min_arrivals: default_min_arrivals(),
            check_reversal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEstimate {
    pub from: String,
    pub to: String,
    pub tau: f64,
    /// Valid trajectories (the denominator).
    pub n_trajectories: usize,
    pub n_hits: usize,
    pub pi_hat: f64,
    /// 95% Wilson interval at the effective sample size.
    pub ci: Interval,
    pub effective_size: f64,
    /// Total-variation distance between arrivals and the destination's
    /// restricted ensemble, when it could be computed.
    pub lambda_diagnostic: Option<f64>,
    /// Runs dropped for energy drift or blow-up.
    pub excluded_drift: usize,
    /// Valid runs that ended in neither macrostate; they stay in the
    /// denominator.
    pub escapes: usize,
    /// Reaction coordinate of each arrival.
    pub arrivals: Vec<f64>,
    /// `(hits re-evolved, hits that returned to the origin)`.
    pub reversal: Option<(usize, usize)>,
    pub max_energy_drift: f64,
}

impl TransitionEstimate {
    /// Standard error of `ln pi_hat` from the effective sample size.
    fn log_se(&self) -> f64 {
        ((1.0 - self.pi_hat) / (self.pi_hat * self.effective_size)).sqrt()
    }
}

struct Outcome {
    valid: bool,
    hit: bool,
    escape: bool,
    q0: f64,
    returned: Option<bool>,
    drift: f64,
}

/// Fraction of the restricted shell ensemble that lies in `to` after
/// time `tau`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_transition(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    spec: &EnsembleSpec,
    to: &Macrostate,
    tau: f64,
    integ: &IntegratorSpec,
    cfg: &TransitionConfig,
) -> Result<TransitionEstimate> {
    let from = spec
        .restriction
        .as_ref()
        .ok_or_else(|| Error::contract("transition estimate needs an ensemble restricted to the origin"))?;
    if !matches!(spec.kind, EnsembleKind::Microcanonical { .. }) {
        return Err(Error::contract("transition estimate needs a microcanonical ensemble"));
    }
    to.validate()?;
    to.check_dim(model.dim())?;
    integ.validate()?;
    let batch = sampling::sample_microcanonical(model, ctx, spec, &cfg.sampler)?;
    let y = batch.boundary.clone();

    let outcomes: Vec<Outcome> = batch
        .points
        .par_iter()
        .map(|s| {
            let tr = match evolve(model, ctx, &y, s, tau, integ) {
                Ok(tr) if !tr.invalid => tr,
                Ok(tr) => {
                    return Outcome {
                        valid: false,
                        hit: false,
                        escape: false,
                        q0: 0.0,
                        returned: None,
                        drift: tr.energy_drift,
                    }
                }
                Err(Error::BlowUp { .. }) => {
                    return Outcome {
                        valid: false,
                        hit: false,
                        escape: false,
                        q0: 0.0,
                        returned: None,
                        drift: f64::INFINITY,
                    }
                }
                Err(e) => panic!("evolution failed on validated input: {e}"),
            };
            let end = &tr.final_point;
            let hit = to.contains(&end.q);
            let returned = (hit && cfg.check_reversal).then(|| {
                evolve(model, ctx, &y, &time_reverse(end), tau, integ)
                    .map(|back| from.contains(&back.final_point.q))
                    .unwrap_or(false)
            });
            Outcome {
                valid: true,
                hit,
                escape: !hit && !from.contains(&end.q),
                q0: end.q[0],
                returned,
                drift: tr.energy_drift,
            }
        })
        .collect();

    let excluded = outcomes.iter().filter(|o| !o.valid).count();
    let n = outcomes.len() - excluded;
    if n == 0 {
        return Err(Error::NoValidTrajectories(outcomes.len()));
    }
    let hits = outcomes.iter().filter(|o| o.valid && o.hit).count();
    let escapes = outcomes.iter().filter(|o| o.valid && o.escape).count();
    let arrivals: Vec<f64> = outcomes.iter().filter(|o| o.valid && o.hit).map(|o| o.q0).collect();

    // Initial conditions come from Markov chains, so hits inherit their
    // autocorrelation.
    let mut series = Vec::new();
    let mut start = 0;
    for &len in &batch.chain_lengths {
        series.push(
            outcomes[start..start + len]
                .iter()
                .filter(|o| o.valid)
                .map(|o| if o.hit { 1.0 } else { 0.0 })
                .collect::<Vec<f64>>(),
        );
        start += len;
    }
    let refs: Vec<&[f64]> = series.iter().map(|v| v.as_slice()).collect();
    let n_eff = stats::effective_size(&refs).min(n as f64);
    let pi_hat = hits as f64 / n as f64;

    let lambda = if cfg.reference_samples > 0 && arrivals.len() >= cfg.min_arrivals {
        let mut rcfg = cfg.sampler.clone();
        rcfg.n_samples = cfg.reference_samples.div_ceil(rcfg.chains);
        rcfg.stream = rng::substream(rcfg.stream, u32::MAX as u64);
        let rspec = EnsembleSpec { kind: spec.kind, restriction: Some(to.clone()) };
        match sampling::sample_microcanonical(model, ctx, &rspec, &rcfg) {
            Ok(reference) => mixing_diagnostic(&arrivals, &reference, cfg.bins, cfg.min_arrivals).ok(),
            Err(_) => None,
        }
    } else {
        None
    };

    let reversal = cfg.check_reversal.then(|| {
        let checked = outcomes.iter().filter(|o| o.returned.is_some()).count();
        let back = outcomes.iter().filter(|o| o.returned == Some(true)).count();
        (checked, back)
    });

    Ok(TransitionEstimate {
        from: from.label.clone(),
        to: to.label.clone(),
        tau,
        n_trajectories: n,
        n_hits: hits,
        pi_hat,
        ci: stats::wilson(pi_hat, n_eff, Z95),
        effective_size: n_eff,
        lambda_diagnostic: lambda,
        excluded_drift: excluded,
        escapes,
        arrivals,
        reversal,
        max_energy_drift: outcomes.iter().filter(|o| o.valid).map(|o| o.drift).fold(0.0, f64::max),
    })
}

/// Total-variation distance (half the L1 distance of bin fractions)
/// between the arrivals' reaction coordinates and a reference sample,
/// over `bins` equal bins spanning the reference.
pub fn mixing_diagnostic(arrivals: &[f64], reference: &SampleBatch, bins: usize, min_arrivals: usize) -> Result<f64> {
    mixing_distance(arrivals, &reference.reaction_coordinate(), bins, min_arrivals)
}

/// [`mixing_diagnostic`] on plain reaction-coordinate samples.
pub fn mixing_distance(arrivals: &[f64], reference: &[f64], bins: usize, min_arrivals: usize) -> Result<f64> {
    if arrivals.len() < min_arrivals {
        return Err(Error::Inconclusive(format!("{} arrivals, need at least {min_arrivals}", arrivals.len())));
    }
    if reference.is_empty() || bins == 0 {
        return Err(Error::contract("mixing diagnostic needs a reference sample and bins"));
    }
    let lo = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hi = if hi > lo { hi + 1e-12 * (hi - lo) } else { lo + 1.0 };
    let a = stats::histogram(arrivals, lo, hi, bins);
    let r = stats::histogram(reference, lo, hi, bins);
    Ok(0.5 * a.iter().zip(&r).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioConfig {
    /// Used for both directions (the reverse run takes a derived stream).
    pub transition: TransitionConfig,
    /// Unrestricted shell sampler for the volume ratio.
    pub volume: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub forward: Option<TransitionEstimate>,
    pub reverse: Option<TransitionEstimate>,
    /// `pi(II -> I) / pi(I -> II)`
    pub pi_ratio: Option<Estimate>,
    /// `vol(I) / vol(II)` on the shell.
    pub volume_ratio: Option<VolumeRatio>,
    pub verdict: Verdict,
    pub note: Option<String>,
}

/// Compares `pi(II->I) / pi(I->II)` with the shell-volume ratio
/// `vol(I) / vol(II)`; passes iff the two intervals overlap.
#[allow(clippy::too_many_arguments)]
pub fn verify_ratio_identity(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    energy: f64,
    width: f64,
    m_i: &Macrostate,
    m_ii: &Macrostate,
    tau: f64,
    integ: &IntegratorSpec,
    cfg: &RatioConfig,
) -> Result<RatioReport> {
    if m_i == m_ii {
        return Ok(RatioReport {
            forward: None,
            reverse: None,
            pi_ratio: Some(Estimate::exact(1.0)),
            volume_ratio: Some(VolumeRatio {
                ratio: Estimate::exact(1.0),
                count_a: 0,
                count_b: 0,
                count_neither: 0,
                crossings: 0,
                effective_size: 0.0,
            }),
            verdict: Verdict::Pass,
            note: Some("identical macrostates".into()),
        });
    }
    let shell = EnsembleKind::Microcanonical { energy, width };
    let fwd_spec = EnsembleSpec { kind: shell, restriction: Some(m_i.clone()) };
    let rev_spec = EnsembleSpec { kind: shell, restriction: Some(m_ii.clone()) };
    let mut rev_cfg = cfg.transition.clone();
    rev_cfg.sampler.stream = rng::substream(cfg.transition.sampler.stream, 1);
    let mut vol_cfg = cfg.volume.clone();
    vol_cfg.stream = rng::substream(cfg.volume.stream, 2);

    let forward = estimate_transition(model, ctx, &fwd_spec, m_ii, tau, integ, &cfg.transition)?;
    let reverse = estimate_transition(model, ctx, &rev_spec, m_i, tau, integ, &rev_cfg)?;
    let volume = match sampling::volume_ratio_on_shell(
        model,
        ctx,
        &EnsembleSpec { kind: shell, restriction: None },
        m_i,
        m_ii,
        &vol_cfg,
    ) {
        Ok(v) => Some(v),
        Err(Error::InsufficientExchange { crossings, required }) => {
            return Ok(RatioReport {
                forward: Some(forward),
                reverse: Some(reverse),
                pi_ratio: None,
                volume_ratio: None,
                verdict: Verdict::Inconclusive,
                note: Some(format!("mixing guard: {crossings} crossings, need {required}")),
            });
        }
        Err(e) => return Err(e),
    };
    if forward.n_hits == 0 || reverse.n_hits == 0 {
        return Ok(RatioReport {
            forward: Some(forward),
            reverse: Some(reverse),
            pi_ratio: None,
            volume_ratio: volume,
            verdict: Verdict::Inconclusive,
            note: Some("no transitions observed in at least one direction".into()),
        });
    }
    let r = reverse.pi_hat / forward.pi_hat;
    let se = (forward.log_se().powi(2) + reverse.log_se().powi(2)).sqrt();
    let pi_ratio =
        Estimate { value: r, stderr: r * se, ci: Interval::new(r * (-Z95 * se).exp(), r * (Z95 * se).exp()) };
    let vol = volume.expect("set above");
    Ok(RatioReport {
        verdict: Verdict::from_bool(pi_ratio.ci.overlaps(&vol.ratio.ci)),
        forward: Some(forward),
        reverse: Some(reverse),
        pi_ratio: Some(pi_ratio),
        volume_ratio: Some(vol),
        note: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JensenConfig {
    /// Canonical sampler for the outer average over II (one chain set per
    /// boundary configuration).
    pub outer: SamplerConfig,
    /// Uniform draws from the regions of I per outer sample.
    pub inner_samples: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_batches() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricAverage {
    /// `<exp G>_{I->II}`, which equals `Z_I / Z_II`.
    pub mean_exp_g: Estimate,
    /// `exp <G>_{I->II}`
    pub exp_mean_g: Estimate,
    pub mean_g: Estimate,
    /// `ln|R_II| - ln|R_I|`
    pub delta_s_int: f64,
    /// `<U(X_I) - U(X_II)>_{I->II}`
    pub mean_heat: Estimate,
    pub jensen_gap: Estimate,
    pub beta: f64,
    pub outer_samples: usize,
    pub inner_samples: usize,
}

fn region_volume(model: &HamiltonianModel, r: &Region) -> Result<f64> {
    let (lo, hi) = r.range(0);
    let (lo, hi) = sampling::clip_to_support(model, lo, hi);
    let mut v = (hi - lo).max(0.0);
    for c in 1..model.dim() {
        let (a, b) = r.range(c);
        v *= b - a;
    }
    if !v.is_finite() {
        return Err(Error::Precondition(format!("region `{}` must be bounded in every coordinate", r.label)));
    }
    Ok(v)
}

fn uniform_point(model: &HamiltonianModel, r: &Region, rng: &mut impl Rng) -> Vec<f64> {
    let (lo, hi) = r.range(0);
    let (lo, hi) = sampling::clip_to_support(model, lo, hi);
    let mut q = vec![rng.random_range(lo..hi)];
    for c in 1..model.dim() {
        let (a, b) = r.range(c);
        q.push(rng.random_range(a..b));
    }
    q
}

/// Mean, exp-mean and Jensen gap of a `(exp G, G)` series with batch-means
/// errors. Summation round-off (`n eps` relative) pads every interval so
/// that exactly constant inputs stay inside it.
fn gap_statistics(h: &[f64], g: &[f64], batches: usize) -> (Estimate, Estimate, Estimate, Estimate) {
    let hb = stats::batch_means(h, batches);
    let gb = stats::batch_means(g, batches);
    let k = hb.len().max(1) as f64;
    let mh = stats::mean(h);
    let mg = stats::mean(g);
    let var_h = stats::variance(&hb) / k;
    let var_g = stats::variance(&gb) / k;
    let cov = stats::covariance(&hb, &gb) / k;
    let e = mg.exp();
    let ulp = (h.len().max(64) as f64) * f64::EPSILON;
    let widen = |est: Estimate, scale: f64| {
        let pad = ulp * scale;
        Estimate { ci: Interval::new(est.ci.lo - pad, est.ci.hi + pad), ..est }
    };
    let mean_exp = widen(Estimate::normal(mh, var_h.sqrt()), mh.abs());
    let mean_g = widen(Estimate::normal(mg, var_g.sqrt()), mg.abs());
    let exp_mean = widen(Estimate::normal(e, e * var_g.sqrt()), e);
    let var_gap = (var_h + e * e * var_g - 2.0 * e * cov).max(0.0);
    let gap = widen(Estimate::normal(mh - e, var_gap.sqrt()), mh.abs().max(e));
    (mean_exp, exp_mean, mean_g, gap)
}

/// Nested average `<<exp G>_I>_II` with
/// `G = ln|R_I| - ln|R_II| - beta (U(X_I) - U(X_II))`: the outer average
/// is over the restricted Gibbs density of II, the inner one uniform over
/// the configuration regions of I. Boundary configurations enter with
/// weights `w_Y Z_Y(II)`.
pub fn asymmetric_average_f(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m_i: &Macrostate,
    m_ii: &Macrostate,
    cfg: &JensenConfig,
) -> Result<AsymmetricAverage> {
    if cfg.inner_samples == 0 {
        return Err(Error::contract("inner_samples must be positive"));
    }
    m_i.validate()?;
    m_ii.validate()?;
    m_i.check_dim(model.dim())?;
    m_ii.check_dim(model.dim())?;
    let vols_i: Vec<f64> = m_i.substates.iter().map(|r| region_volume(model, r)).collect::<Result<_>>()?;
    let vol_i: f64 = vols_i.iter().sum();
    let vol_ii: f64 = m_ii.substates.iter().map(|r| region_volume(model, r)).sum::<Result<f64>>()?;
    let ln_ratio = vol_i.ln() - vol_ii.ln();

    // Outer Y weights.
    let configs = ctx.configs();
    let weights: Vec<f64> = if configs.len() == 1 {
        vec![1.0]
    } else {
        let raw: Vec<f64> = configs
            .iter()
            .map(|c| {
                let single = ConditioningContext::new(vec![BoundaryConfig { weight: 1.0, ..c.clone() }])?;
                let z = states::restricted_partition_function(model, &single, beta, m_ii, &ThermoOptions::default())?;
                Ok(c.weight * z.value)
            })
            .collect::<Result<_>>()?;
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    };

    let mut h_all = Vec::new();
    let mut g_all = Vec::new();
    let mut heat_all = Vec::new();
    let mut w_all = Vec::new();
    for (yi, (c, &wy)) in configs.iter().zip(&weights).enumerate() {
        if wy == 0.0 {
            continue;
        }
        let mut outer_cfg = cfg.outer.clone();
        outer_cfg.boundary = Some(c.label.clone());
        outer_cfg.stream = rng::substream(cfg.outer.stream, yi as u64);
        let spec = EnsembleSpec::canonical(beta).restricted(m_ii.clone());
        let outer = sampling::sample_canonical(model, ctx, &spec, &outer_cfg)?;
        let modifier: &Modifier = &c.modifier;
        let inner_stream = rng::substream(outer_cfg.stream, u32::MAX as u64);
        let rows: Vec<(f64, f64, f64)> = outer
            .points
            .par_iter()
            .enumerate()
            .map(|(j, s)| {
                let mut rng = rng::stream(cfg.outer.seed, rng::substream(inner_stream, j as u64));
                let u2 = model.potential_unchecked(&s.q, modifier);
                let (mut h, mut g, mut heat) = (0.0, 0.0, 0.0);
                for _ in 0..cfg.inner_samples {
                    let pick = rng.random::<f64>() * vol_i;
                    let mut acc = 0.0;
                    let mut idx = vols_i.len() - 1;
                    for (k, v) in vols_i.iter().enumerate() {
                        acc += v;
                        if pick < acc {
                            idx = k;
                            break;
                        }
                    }
                    let q = uniform_point(model, &m_i.substates[idx], &mut rng);
                    let u1 = model.potential_unchecked(&q, modifier);
                    let gk = ln_ratio - beta * (u1 - u2);
                    h += gk.exp();
                    g += gk;
                    heat += u1 - u2;
                }
                let k = cfg.inner_samples as f64;
                (h / k, g / k, heat / k)
            })
            .collect();
        for (h, g, heat) in rows {
            h_all.push(h);
            g_all.push(g);
            heat_all.push(heat);
            w_all.push(wy);
        }
    }
    // Y weights are folded in by rescaling each value; with one Y they are 1.
    let n_y = weights.iter().filter(|w| **w > 0.0).count() as f64;
    let scale = |xs: &[f64]| -> Vec<f64> { xs.iter().zip(&w_all).map(|(x, w)| x * w * n_y).collect() };
    let (h, g, heat) = (scale(&h_all), scale(&g_all), scale(&heat_all));
    let (mean_exp_g, exp_mean_g, mean_g, gap) = gap_statistics(&h, &g, cfg.batches);
    let heat_b = stats::batch_means(&heat, cfg.batches);
    let mean_heat =
        Estimate::normal(stats::mean(&heat), (stats::variance(&heat_b) / heat_b.len().max(1) as f64).sqrt());
    Ok(AsymmetricAverage {
        mean_exp_g,
        exp_mean_g,
        mean_g,
        delta_s_int: -ln_ratio,
        mean_heat,
        jensen_gap: gap,
        beta,
        outer_samples: h.len(),
        inner_samples: cfg.inner_samples,
    })
}

/// `<exp G> - exp <G>` with a delta-method interval.
pub fn jensen_gap(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m_i: &Macrostate,
    m_ii: &Macrostate,
    cfg: &JensenConfig,
) -> Result<Estimate> {
    Ok(asymmetric_average_f(model, ctx, beta, m_i, m_ii, cfg)?.jensen_gap)
}

/// Jensen gap of an explicit, equally weighted sample of `G` values
/// treated as independent.
pub fn jensen_gap_of_samples(g: &[f64]) -> Result<Estimate> {
    if g.is_empty() {
        return Err(Error::contract("empty G sample"));
    }
    let h: Vec<f64> = g.iter().map(|x| x.exp()).collect();
    Ok(gap_statistics(&h, g, g.len()).3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub report: BoundReport,
    pub beta: f64,
    pub ln_z_ratio: f64,
    /// `S(II) - S(I)`
    pub delta_s_int: f64,
    /// `<U>_I - <U>_II`
    pub mean_heat: f64,
    pub thermo_i: ThermoReport,
    pub thermo_ii: ThermoReport,
}

impl EqualityReport {
    /// Reverse/forward probabilities with the exact ratio `Z_I / Z_II`,
    /// scaled so the larger is 1.
    pub fn exact_probabilities(&self) -> (f64, f64) {
        if self.ln_z_ratio <= 0.0 {
            (1.0, self.ln_z_ratio.exp())
        } else {
            ((-self.ln_z_ratio).exp(), 1.0)
        }
    }
}

/// Checks `ln(Z_I / Z_II) = -dS_int - beta <dQ>` with entropies from the
/// direct `-int rho ln rho` route.
pub fn verify_entropy_equality(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m_i: &Macrostate,
    m_ii: &Macrostate,
    opts: &ThermoOptions,
) -> Result<EqualityReport> {
    let a = states::entropy(model, ctx, beta, m_i, opts)?;
    let b = states::entropy(model, ctx, beta, m_ii, opts)?;
    let ds = b.entropy_direct - a.entropy_direct;
    let dq = a.mean_u - b.mean_u;
    let lhs = a.ln_z - b.ln_z;
    let rhs = -ds - beta * dq;
    let error = match a.method {
        states::Method::Quadrature => 1e-8,
        states::Method::MonteCarlo => {
            a.errors.z / a.z
                + b.errors.z / b.z
                + a.errors.entropy
                + b.errors.entropy
                + beta * (a.errors.mean_u + b.errors.mean_u)
        }
    };
    let report = BoundReport::equality(
        Relation::EntropyEquality,
        lhs,
        rhs,
        error,
        inputs(&[
            ("beta", beta),
            ("ln_z_i", a.ln_z),
            ("ln_z_ii", b.ln_z),
            ("s_i", a.entropy_direct),
            ("s_ii", b.entropy_direct),
            ("delta_s_int", ds),
            ("mean_heat", dq),
        ]),
    );
    Ok(EqualityReport { report, beta, ln_z_ratio: lhs, delta_s_int: ds, mean_heat: dq, thermo_i: a, thermo_ii: b })
}

fn check_probabilities(pi_fwd: f64, pi_rev: f64, rev_name: &str) -> Result<()> {
    if pi_fwd == 0.0 {
        return Err(Error::UndefinedRatio("forward probability is zero".into()));
    }
    if !(pi_fwd > 0.0 && pi_fwd <= 1.0) {
        return Err(Error::contract("forward probability must lie in (0, 1]"));
    }
    if !(pi_rev > 0.0 && pi_rev <= 1.0) {
        return Err(Error::contract(format!("{rev_name} must lie in (0, 1]")));
    }
    Ok(())
}

/// `beta <dQ> + ln(pi_rev / pi_fwd) + dS_int >= 0`.
pub fn check_detailed_balance_bound(
    beta: f64,
    mean_heat: f64,
    delta_s_int: f64,
    pi_fwd: f64,
    pi_rev: f64,
    tolerance: f64,
) -> Result<BoundReport> {
    check_probabilities(pi_fwd, pi_rev, "reverse probability")?;
    if ![beta, mean_heat, delta_s_int].iter().all(|x| x.is_finite()) {
        return Err(Error::contract("bound inputs must be finite"));
    }
    let lhs = beta * mean_heat + (pi_rev / pi_fwd).ln() + delta_s_int;
    Ok(BoundReport::inequality(
        Relation::DetailedBalance,
        lhs,
        0.0,
        tolerance,
        inputs(&[
            ("beta", beta),
            ("mean_heat", mean_heat),
            ("delta_s_int", delta_s_int),
            ("pi_fwd", pi_fwd),
            ("pi_rev", pi_rev),
        ]),
    ))
}

/// Detailed-balance bound with a reverse-probability overestimate `pi_star`. When the true
/// reverse probability is known, `pi_star < pi_true` is an error.
pub fn check_overestimate_bound(
    beta: f64,
    mean_heat: f64,
    delta_s_int: f64,
    pi_fwd: f64,
    pi_star: f64,
    pi_true: Option<f64>,
    tolerance: f64,
) -> Result<BoundReport> {
    if let Some(truth) = pi_true {
        if pi_star < truth {
            return Err(Error::Overestimate { star: pi_star, truth });
        }
    }
    check_probabilities(pi_fwd, pi_star, "pi_star")?;
    if ![beta, mean_heat, delta_s_int].iter().all(|x| x.is_finite()) {
        return Err(Error::contract("bound inputs must be finite"));
    }
    let lhs = beta * mean_heat + (pi_star / pi_fwd).ln() + delta_s_int;
    let mut echo = inputs(&[
        ("beta", beta),
        ("mean_heat", mean_heat),
        ("delta_s_int", delta_s_int),
        ("pi_fwd", pi_fwd),
        ("pi_star", pi_star),
    ]);
    if let Some(truth) = pi_true {
        echo.insert("pi_true".into(), truth);
        echo.insert("overestimate_margin".into(), (pi_star / truth).ln());
    }
    Ok(BoundReport::inequality(Relation::OverestimatedReverse, lhs, 0.0, tolerance, echo))
}
