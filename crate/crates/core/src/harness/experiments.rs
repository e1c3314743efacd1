//! Executes one validated experiment into checks and payloads.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::detbal::{self, RatioConfig, Verdict};
use crate::dynamics::{evolve_observed, reversibility_check, IntegratorSpec};
use crate::error::{Error, Result};
use crate::model::{HamiltonianModel, PhasePoint, PotentialSpec};
use crate::quantum::{self, EnergyShellProjection, Spectrum};
use crate::replicator;
use crate::sampling::{self, EnsembleSpec, SamplerConfig};
use crate::states::{self, ThermoOptions};
use crate::stats::{self, Interval, Z95};

use super::config::*;
use super::report::{Check, Payload};

pub type Outcome = (Vec<Check>, BTreeMap<String, Payload>);

/// Computation errors become verdicts; `Inconclusive` stays inconclusive.
pub fn failed(name: &str, e: &Error) -> Check {
    let verdict = if matches!(e, Error::Inconclusive(_)) { Verdict::Inconclusive } else { Verdict::Fail };
    Check::new(name, verdict).with_detail(e.to_string())
}

pub fn execute(cfg: &ExperimentConfig) -> Outcome {
    let scale = cfg.tolerance_scale;
    let seed = cfg.seed;
    let result = match &cfg.experiment {
        Experiment::HarmonicSanity(x) => harmonic_sanity(x, seed, scale),
        Experiment::EntropyEquality(x) => entropy_equality(x, seed, scale),
        Experiment::RatioIdentity(x) => ratio_identity(x, seed),
        Experiment::Jensen(x) => jensen(x, seed, scale),
        Experiment::OverestimateBound(x) => overestimate_bound(x, scale),
        Experiment::QuantumRatio(x) => quantum_ratio(x, seed, scale),
        Experiment::QuantumEntropy(x) => quantum_entropy(x, seed, scale),
        Experiment::QuantumInstance(x) => quantum_instance(x, seed, scale),
        Experiment::Replicator(x) => replicator_run(x, seed, scale),
        Experiment::ReplicatorCoupling(x) => replicator_coupling(x, seed, scale),
    };
    result.unwrap_or_else(|e| (vec![failed(cfg.experiment.kind(), &e)], BTreeMap::new()))
}

fn payloads(items: Vec<(&str, Payload)>) -> BTreeMap<String, Payload> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn data(value: &impl Serialize) -> Result<Payload> {
    Payload::data(value)
}

/// Density histogram over the sample's own range.
pub fn density_histogram(variable: &str, xs: &[f64], bins: usize) -> Option<Payload> {
    if xs.is_empty() || bins == 0 {
        return None;
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let fractions = stats::histogram(xs, lo, hi, bins);
    Some(Payload::Histogram {
        variable: variable.to_string(),
        bin_width: width,
        centers: (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        density: fractions.iter().map(|f| f / width).collect(),
    })
}

fn thermo(opts: &ThermoOptions, seed: u64) -> ThermoOptions {
    ThermoOptions { seed, ..*opts }
}

fn harmonic_sanity(x: &HarmonicSanity, seed: u64, scale: f64) -> Result<Outcome> {
    let model = HamiltonianModel::from_spec(&x.model)?;
    let ctx = crate::model::ConditioningContext::trivial();
    let y = ctx.first_label().to_string();
    let dim = model.dim();
    let s = PhasePoint::new(x.start[..dim].to_vec(), x.start[dim..].to_vec())?;
    let integ = IntegratorSpec::new(x.dt)?;
    let mut checks = Vec::new();

    let dev = reversibility_check(&model, &ctx, &y, &s, x.tau, &integ)?;
    checks.push(Check::at_most("reversibility", dev, 1e-10 * scale));

    let mut rows = Vec::new();
    let mut step = 0usize;
    evolve_observed(&model, &ctx, &y, &s, x.tau, &integ, |t, q, p, h| {
        if step.is_multiple_of(x.record_every) {
            rows.push(vec![t, q[0], p[0], h]);
        }
        step += 1;
    })?;

    let mut energies = Vec::with_capacity(x.long_steps + 1);
    let long =
        evolve_observed(&model, &ctx, &y, &s, x.long_steps as f64 * x.dt, &integ, |_, _, _, h| energies.push(h))?;
    let h0 = long.initial_energy;
    let norm = h0.abs().max(1.0);
    checks.push(Check::at_most("bounded energy error", long.energy_drift / norm, 1e-4 * scale));
    let w = (energies.len() / 10).max(1);
    let head = stats::mean(&energies[..w]);
    let tail = stats::mean(&energies[energies.len() - w..]);
    checks.push(Check::at_most("no secular energy drift", (tail - head).abs() / norm, 1e-6 * scale));

    let sampler = SamplerConfig::new(1.0 / x.beta.sqrt(), 1000, x.canonical_samples, seed);
    let batch = sampling::sample_canonical(&model, &ctx, &EnsembleSpec::canonical(x.beta), &sampler)?;
    if let PotentialSpec::Harmonic { k, q0 } = x.model.potential {
        let sq: Vec<f64> = batch.points.iter().map(|s| (s.q[0] - q0).powi(2)).collect();
        let m = stats::mean(&sq);
        let se = (stats::variance(&sq) * stats::integrated_autocorr_time(&sq) / sq.len() as f64).sqrt();
        let target = 1.0 / (x.beta * k);
        checks.push(
            Check::at_most("canonical variance", (m - target).abs() / se, 4.0 * scale)
                .with_detail(format!("<(q-q0)^2> = {m} +- {se}, expected {target}")),
        );
    }

    let columns = ["t", "q0", "p0", "energy"].iter().map(|s| s.to_string()).collect();
    let summary = serde_json::json!({
        "reversibility_deviation": dev,
        "initial_energy": h0,
        "max_energy_error": long.energy_drift,
        "head_mean_energy": head,
        "tail_mean_energy": tail,
        "acceptance_rate": batch.acceptance_rate,
    });
    Ok((checks, payloads(vec![("trajectory", Payload::Trajectory { columns, rows }), ("summary", data(&summary)?)])))
}

fn sorted_unique(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn entropy_equality(x: &EntropyEquality, seed: u64, scale: f64) -> Result<Outcome> {
    let (model, ctx) = build_system(&x.model, &x.boundaries)?;
    let opts = thermo(&x.thermo, seed);
    let mut checks = Vec::new();
    let betas = sorted_unique(&x.betas);
    let mut slack = Vec::new();
    let mut rows = Vec::new();
    for &beta in &betas {
        let eq = detbal::verify_entropy_equality(&model, &ctx, beta, &x.macrostate_i, &x.macrostate_ii, &opts)?;
        let tol = eq.report.error * scale;
        checks.push(Check::at_most(format!("equality beta={beta}"), eq.report.slack.abs(), tol));
        let (fwd, rev) = eq.exact_probabilities();
        let e1 = detbal::check_detailed_balance_bound(beta, eq.mean_heat, eq.delta_s_int, fwd, rev, tol)?;
        checks.push(Check::at_most(format!("exact bound saturates beta={beta}"), e1.lhs.abs(), tol));
        slack.push(eq.report.slack);
        rows.push(serde_json::json!({
            "beta": beta,
            "ln_z_ratio": eq.ln_z_ratio,
            "delta_s_int": eq.delta_s_int,
            "mean_heat": eq.mean_heat,
            "slack": eq.report.slack,
            "tolerance": eq.report.error,
            "method_i": eq.thermo_i.method,
            "method_ii": eq.thermo_ii.method,
            "bound_lhs": e1.lhs,
        }));
    }
    Ok((
        checks,
        payloads(vec![
            ("bound_slack", Payload::BoundSlack { parameter: "beta".into(), x: betas, slack }),
            ("summary", data(&rows)?),
        ]),
    ))
}

fn ratio_identity(x: &RatioIdentity, seed: u64) -> Result<Outcome> {
    let (model, ctx) = build_system(&x.model, &x.boundaries)?;
    let mut transition = x.transition.clone();
    transition.sampler.seed = seed;
    let mut volume = x.volume.clone();
    volume.seed = seed;
    let cfg = RatioConfig { transition, volume };
    let report = detbal::verify_ratio_identity(
        &model,
        &ctx,
        x.energy,
        x.width,
        &x.macrostate_i,
        &x.macrostate_ii,
        x.tau,
        &x.integrator,
        &cfg,
    )?;
    let mut checks = Vec::new();
    let detail = match (&report.pi_ratio, &report.volume_ratio) {
        (Some(p), Some(v)) => format!(
            "pi ratio {:.4} [{:.4}, {:.4}] vs volume ratio {:.4} [{:.4}, {:.4}]",
            p.value, p.ci.lo, p.ci.hi, v.ratio.value, v.ratio.ci.lo, v.ratio.ci.hi
        ),
        _ => report.note.clone().unwrap_or_default(),
    };
    if x.expect_inconclusive {
        checks.push(
            Check::pass_if("starved mixing guard is inconclusive", report.verdict == Verdict::Inconclusive)
                .with_detail(format!("verdict {:?}: {detail}", report.verdict)),
        );
    } else {
        let mut c = Check::new("ratio identity", report.verdict).with_detail(detail);
        c.value = report.pi_ratio.map(|p| p.value);
        checks.push(c);
        if x.min_trajectories > 0 {
            let n = [&report.forward, &report.reverse]
                .iter()
                .map(|t| t.as_ref().map_or(0, |t| t.n_trajectories))
                .min()
                .unwrap_or(0);
            checks.push(Check::pass_if("trajectory count", n >= x.min_trajectories).with_value(n as f64));
        }
    }
    let mut items = Vec::new();
    if let Some(h) = report.forward.as_ref().and_then(|f| density_histogram("q0", &f.arrivals, x.transition.bins)) {
        items.push(("histogram", h));
    }
    let mut summary = report.clone();
    for t in [&mut summary.forward, &mut summary.reverse].into_iter().flatten() {
        t.arrivals.clear();
    }
    items.push(("summary", data(&summary)?));
    Ok((checks, payloads(items)))
}

fn jensen(x: &Jensen, seed: u64, scale: f64) -> Result<Outcome> {
    let (model, ctx) = build_system(&x.model, &x.boundaries)?;
    let mut cfg = x.sampler.clone();
    cfg.outer.seed = seed;
    let opts = thermo(&x.thermo, seed);
    let mut checks = Vec::new();
    let asym = detbal::asymmetric_average_f(&model, &ctx, x.beta, &x.macrostate_i, &x.macrostate_ii, &cfg)?;

    let zi = states::restricted_partition_function(&model, &ctx, x.beta, &x.macrostate_i, &opts)?;
    let zii = states::restricted_partition_function(&model, &ctx, x.beta, &x.macrostate_ii, &opts)?;
    let target = zi.value / zii.value;
    let rel = ((zi.stderr / zi.value).powi(2) + (zii.stderr / zii.value).powi(2)).sqrt();
    let target_ci = Interval::new(target * (1.0 - Z95 * rel), target * (1.0 + Z95 * rel));
    let f = &asym.mean_exp_g;
    checks.push(
        Check::pass_if("<F> matches Z_I/Z_II", f.ci.overlaps(&target_ci))
            .with_value(f.value)
            .with_detail(format!("<F> = {} [{}, {}], Z_I/Z_II = {target}", f.value, f.ci.lo, f.ci.hi)),
    );
    let gap = &asym.jensen_gap;
    checks.push(
        Check::pass_if("jensen gap nonnegative", gap.ci.hi >= 0.0)
            .with_value(gap.value)
            .with_detail(format!("gap CI [{}, {}]", gap.ci.lo, gap.ci.hi)),
    );
    if x.expect_strict_gap {
        checks.push(Check::pass_if("jensen gap excludes zero", gap.ci.lo > 0.0).with_value(gap.ci.lo));
    }

    // lhs = ln<F> - <G>, errors added conservatively.
    let err = Z95 * (f.stderr / f.value + asym.mean_g.stderr) * scale;
    let (fwd, rev) = if f.value <= 1.0 { (1.0, f.value) } else { (1.0 / f.value, 1.0) };
    let sampled = detbal::check_detailed_balance_bound(x.beta, asym.mean_heat.value, asym.delta_s_int, fwd, rev, err)?;
    checks.push(
        Check::pass_if("bound from sampled inputs", sampled.satisfied)
            .with_value(sampled.lhs)
            .with_detail(format!("lhs {} >= -{err}", sampled.lhs)),
    );

    let eq = detbal::verify_entropy_equality(&model, &ctx, x.beta, &x.macrostate_i, &x.macrostate_ii, &opts)?;
    let (fwd, rev) = eq.exact_probabilities();
    let tol = eq.report.error * scale;
    let exact = detbal::check_detailed_balance_bound(x.beta, eq.mean_heat, eq.delta_s_int, fwd, rev, tol)?;
    checks.push(Check::at_most("exact bound saturates", exact.lhs.abs(), tol));

    let summary = serde_json::json!({
        "average": asym,
        "z_ratio": target,
        "bound_sampled": sampled,
        "bound_exact": exact,
    });
    Ok((checks, payloads(vec![("summary", data(&summary)?)])))
}

fn overestimate_bound(x: &OverestimateBound, scale: f64) -> Result<Outcome> {
    let res = detbal::check_overestimate_bound(
        x.beta,
        x.mean_heat,
        x.delta_s_int,
        x.pi_forward,
        x.pi_star,
        x.pi_true,
        1e-12 * scale,
    );
    let (check, payload) = match (res, x.expect_violation) {
        (Err(e @ Error::Overestimate { .. }), true) => {
            (Check::pass_if("overestimate contract violation raises an error", true).with_detail(e.to_string()), None)
        }
        (Err(e), _) => (failed("overestimate bound", &e), None),
        (Ok(r), true) => (
            Check::pass_if("overestimate contract violation raises an error", false).with_detail("no error was raised"),
            Some(r),
        ),
        (Ok(r), false) => (Check::pass_if("overestimate bound", r.satisfied).with_value(r.slack), Some(r)),
    };
    let items = match payload {
        Some(r) => vec![("summary", data(&r)?)],
        None => vec![],
    };
    Ok((vec![check], payloads(items)))
}

fn quantum_ratio(x: &QuantumRatio, seed: u64, scale: f64) -> Result<Outcome> {
    let batch = quantum::random_ratio_batch(x.spectrum, x.instances, x.d_min, x.d_max, x.taus_per_instance, seed)?;
    let check = match x.spectrum {
        Spectrum::Goe => Check::at_most(
            format!("TR-symmetric ratio identity ({} instances)", x.instances),
            batch.worst,
            1e-10 * scale,
        ),
        Spectrum::Phased => {
            Check::above(format!("TR-broken control violates identity ({} instances)", x.instances), batch.worst, 1e-3)
        }
    };
    Ok((vec![check], payloads(vec![("summary", data(&batch)?)])))
}

fn quantum_entropy(x: &QuantumEntropy, seed: u64, scale: f64) -> Result<Outcome> {
    let out = quantum::random_entropy_batch(x.instances, x.d_min, x.d_max, x.beta, seed)?;
    let check = Check::at_most(format!("entropy identity ({} instances)", x.instances), out.worst, 1e-10 * scale);
    Ok((vec![check], payloads(vec![("summary", data(&out)?)])))
}

fn quantum_instance(x: &QuantumInstance, seed: u64, scale: f64) -> Result<Outcome> {
    let spec = quantum::InstanceSpec { seed, ..x.instance.clone() };
    let inst = spec.build()?;
    let shell = match &x.shell {
        Some(w) => EnergyShellProjection::new(&inst.system, w.energy, w.width)?,
        None => EnergyShellProjection::identity(&inst.system),
    };
    let cmp = quantum::ratio_violation(&inst.system, &shell, &inst.pair, x.tau)?;
    let commute = [&inst.pair.p_i, &inst.pair.p_ii]
        .iter()
        .map(|p| {
            let p = p.map(|v| num_complex::Complex64::new(v, 0.0));
            (&shell.matrix * &p - &p * &shell.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let check = if commute > 1e-10 {
        Check::new("ratio identity", Verdict::Inconclusive)
            .with_detail(format!("projections do not commute with the shell ({commute:e})"))
    } else if inst.system.tr_symmetric() {
        Check::at_most("ratio identity", cmp.violation, 1e-10 * scale)
    } else {
        Check::above("TR-broken control violates identity", cmp.violation, 1e-3)
    };
    let canonical = quantum::canonical_ratio(&inst.system, x.beta, &inst.pair)?;
    let summary = serde_json::json!({
        "comparison": cmp,
        "canonical_ratio": canonical,
        "shell_rank": shell.rank,
        "commutation": inst.pair.commutation,
    });
    Ok((vec![check], payloads(vec![("summary", data(&summary)?)])))
}

fn replicator_run(x: &Replicator, seed: u64, scale: f64) -> Result<Outcome> {
    let cps = x.checkpoints.clone().unwrap_or_else(|| (1..=5).map(|k| x.t_end * k as f64 / 5.0).collect());
    let ens = replicator::simulate_ensemble(&x.params, x.t_end, x.paths, &cps, seed)?;
    let mut checks = vec![Check::at_most("mean path law (max z-score)", ens.max_z_score(), 3.0 * scale)];
    let fit = replicator::fit_growth_summaries(&ens.summaries, &cps, 0.95);
    match &fit {
        Ok(fit) => {
            checks.push(
                Check::pass_if("birth rate recovered", fit.g_hat.ci.contains(x.params.g)).with_value(fit.g_hat.value),
            );
            checks.push(
                Check::pass_if("death rate recovered", fit.delta_hat.ci.contains(x.params.delta))
                    .with_value(fit.delta_hat.value),
            );
        }
        Err(e) => checks.push(failed("rate fit", e)),
    }
    let bound = if x.params.g > 0.0 && x.params.delta > 0.0 {
        let b = replicator::check_growth_bound(&x.params)?;
        checks.push(Check::pass_if("growth bound", b.satisfied).with_value(b.slack));
        Some(b)
    } else {
        None
    };
    let path = replicator::simulate_population(&x.params, x.t_end, seed)?;
    let mut t = vec![0.0];
    let mut n = vec![path.n0];
    t.extend(&path.times);
    n.extend(&path.sizes);
    t.push(path.t_end);
    n.push(*n.last().expect("nonempty"));
    let summary = serde_json::json!({
        "checkpoints": ens.checkpoints,
        "mean": ens.mean,
        "stderr": ens.stderr,
        "expected": cps.iter().map(|&c| x.params.mean_population(c)).collect::<Vec<_>>(),
        "fit": fit.ok(),
        "bound": bound,
    });
    Ok((checks, payloads(vec![("population", Payload::Population { t, n }), ("summary", data(&summary)?)])))
}

fn replicator_coupling(x: &ReplicatorCoupling, seed: u64, scale: f64) -> Result<Outcome> {
    let (model, ctx) = build_system(&x.model, &x.boundaries)?;
    let opts = thermo(&x.thermo, seed);
    let eq = detbal::verify_entropy_equality(&model, &ctx, x.beta, &x.macrostate_i, &x.macrostate_ii, &opts)?;
    let mut checks = vec![Check::at_most("equality", eq.report.slack.abs(), eq.report.error * scale)];
    let factors = sorted_unique(&x.factors);
    let mut slack = Vec::new();
    let mut rows = Vec::new();
    for &f in &factors {
        let params = replicator::couple_to_detbal(&eq, f)?;
        let b = replicator::check_growth_bound(&params)?;
        checks.push(Check::at_most(format!("slack equals -ln f (f={f})"), (b.slack + f.ln()).abs(), 1e-12 * scale));
        slack.push(b.slack);
        rows.push(serde_json::json!({ "f": f, "g_over_delta": params.g / params.delta, "slack": b.slack }));
    }
    let summary = serde_json::json!({
        "beta": eq.beta,
        "mean_heat": eq.mean_heat,
        "delta_s_int": eq.delta_s_int,
        "coupled": rows,
    });
    Ok((
        checks,
        payloads(vec![
            ("bound_slack", Payload::BoundSlack { parameter: "f".into(), x: factors, slack }),
            ("summary", data(&summary)?),
        ]),
    ))
}
