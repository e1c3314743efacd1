//! Exponential replicators as a linear birth-death process, growth-rate
//! estimation from event counts, and the thermodynamic bound on `g / delta`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::detbal::{BoundReport, EqualityReport, Relation};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{self, Estimate, Interval};

/// Fewest events (births + deaths over all paths) `fit_growth` accepts.
pub const MIN_EVENTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorParams {
    /// Per-capita birth rate.
    pub g: f64,
    /// Per-capita death rate.
    pub delta: f64,
    pub n0: u64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Heat released per replication.
    #[serde(default)]
    pub delta_q: f64,
    /// Internal entropy change per replication.
    #[serde(default)]
    pub delta_s_int: f64,
}

fn one() -> f64 {
    1.0
}

impl ReplicatorParams {
    pub fn new(g: f64, delta: f64, n0: u64) -> Self {
        ReplicatorParams { g, delta, n0, beta: 1.0, delta_q: 0.0, delta_s_int: 0.0 }
    }

    /// Rates may be zero for simulation (pure birth or pure death).
    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0 && self.g.is_finite() && self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::contract("rates must be finite and nonnegative"));
        }
        if self.n0 == 0 {
            return Err(Error::contract("initial population must be at least 1"));
        }
        Ok(())
    }

    /// `n0 exp((g - delta) t)`
    pub fn mean_population(&self, t: f64) -> f64 {
        self.n0 as f64 * ((self.g - self.delta) * t).exp()
    }

    /// Variance of the linear birth-death process at time `t`.
    pub fn population_variance(&self, t: f64) -> f64 {
        let r = self.g - self.delta;
        let n0 = self.n0 as f64;
        if r.abs() < 1e-12 {
            n0 * 2.0 * self.g * t
        } else {
            n0 * (self.g + self.delta) / r * (r * t).exp() * ((r * t).exp() - 1.0)
        }
    }
}

/// One realization: event times and the population right after each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationPath {
    pub seed: u64,
    pub stream: u64,
    pub n0: u64,
    pub t_end: f64,
    pub times: Vec<f64>,
    pub sizes: Vec<u64>,
}

impl PopulationPath {
    pub fn population_at(&self, t: f64) -> u64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => self.n0,
            k => self.sizes[k - 1],
        }
    }

    pub fn summary(&self, checkpoints: &[f64]) -> PathSummary {
        let mut births = 0;
        let mut deaths = 0;
        let mut exposure = 0.0;
        let mut prev_t = 0.0;
        let mut prev_n = self.n0;
        for (&t, &n) in self.times.iter().zip(&self.sizes) {
            exposure += prev_n as f64 * (t - prev_t);
            if n > prev_n {
                births += 1;
            } else {
                deaths += 1;
            }
            prev_t = t;
            prev_n = n;
        }
        exposure += prev_n as f64 * (self.t_end - prev_t);
        PathSummary {
            births,
            deaths,
            exposure,
            at_checkpoints: checkpoints.iter().map(|&t| self.population_at(t)).collect(),
            final_population: prev_n,
        }
    }

    /// Rows `t,n` starting at `(0, n0)` and ending at `t_end`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,n")?;
        writeln!(w, "0,{}", self.n0)?;
        for (t, n) in self.times.iter().zip(&self.sizes) {
            writeln!(w, "{t},{n}")?;
        }
        writeln!(w, "{},{}", self.t_end, self.sizes.last().copied().unwrap_or(self.n0))?;
        Ok(())
    }
}

/// Event counts and integrated population of a path, without the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub births: u64,
    pub deaths: u64,
    /// `int_0^t_end n(t) dt`
    pub exposure: f64,
    pub at_checkpoints: Vec<u64>,
    pub final_population: u64,
}

/// Exact event-driven simulation; `on_event(t, n_after)` sees each event.
fn gillespie(params: &ReplicatorParams, t_end: f64, rng: &mut impl Rng, mut on_event: impl FnMut(f64, u64)) {
    let total = params.g + params.delta;
    if total <= 0.0 {
        return;
    }
    let p_birth = params.g / total;
    let mut n = params.n0;
    let mut t = 0.0;
    while n > 0 {
        let rate = total * n as f64;
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > t_end {
            break;
        }
        if rng.random::<f64>() < p_birth {
            n += 1;
        } else {
            n -= 1;
        }
        on_event(t, n);
    }
}

fn check_horizon(params: &ReplicatorParams, t_end: f64) -> Result<()> {
    params.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::contract("t_end must be positive"));
    }
    Ok(())
}

fn simulate_stream(params: &ReplicatorParams, t_end: f64, seed: u64, stream: u64) -> PopulationPath {
    let mut rng = rng::stream(seed, stream);
    let mut times = Vec::new();
    let mut sizes = Vec::new();
    gillespie(params, t_end, &mut rng, |t, n| {
        times.push(t);
        sizes.push(n);
    });
    PopulationPath { seed, stream, n0: params.n0, t_end, times, sizes }
}

/// A single path; extinction is absorbing.
pub fn simulate_population(params: &ReplicatorParams, t_end: f64, seed: u64) -> Result<PopulationPath> {
    check_horizon(params, t_end)?;
    Ok(simulate_stream(params, t_end, seed, 0))
}

/// `n_paths` independent paths (path `i` on stream `i`).
pub fn simulate_paths(params: &ReplicatorParams, t_end: f64, n_paths: usize, seed: u64) -> Result<Vec<PopulationPath>> {
    check_horizon(params, t_end)?;
    Ok((0..n_paths).into_par_iter().map(|i| simulate_stream(params, t_end, seed, i as u64)).collect())
}

fn summarize_stream(params: &ReplicatorParams, t_end: f64, checkpoints: &[f64], seed: u64, stream: u64) -> PathSummary {
    let mut rng = rng::stream(seed, stream);
    let mut births = 0;
    let mut deaths = 0;
    let mut exposure = 0.0;
    let mut at = vec![params.n0; checkpoints.len()];
    let mut next_cp = 0;
    let mut prev_t = 0.0;
    let mut prev_n = params.n0;
    gillespie(params, t_end, &mut rng, |t, n| {
        while next_cp < checkpoints.len() && checkpoints[next_cp] < t {
            at[next_cp] = prev_n;
            next_cp += 1;
        }
        exposure += prev_n as f64 * (t - prev_t);
        if n > prev_n {
            births += 1;
        } else {
            deaths += 1;
        }
        prev_t = t;
        prev_n = n;
    });
    for slot in at.iter_mut().skip(next_cp) {
        *slot = prev_n;
    }
    exposure += prev_n as f64 * (t_end - prev_t);
    PathSummary { births, deaths, exposure, at_checkpoints: at, final_population: prev_n }
}

/// Streaming statistics over many paths without storing events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEnsemble {
    pub params: ReplicatorParams,
    pub t_end: f64,
    pub checkpoints: Vec<f64>,
    pub summaries: Vec<PathSummary>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl PopulationEnsemble {
    /// Largest `|mean - n0 e^{(g-delta)t}| / stderr` over checkpoints.
    pub fn max_z_score(&self) -> f64 {
        self.checkpoints
            .iter()
            .zip(self.mean.iter().zip(&self.stderr))
            .map(|(&t, (&m, &se))| {
                let expected = self.params.mean_population(t);
                if se > 0.0 {
                    (m - expected).abs() / se
                } else if (m - expected).abs() < 1e-12 * expected.max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn simulate_ensemble(
    params: &ReplicatorParams,
    t_end: f64,
    n_paths: usize,
    checkpoints: &[f64],
    seed: u64,
) -> Result<PopulationEnsemble> {
    check_horizon(params, t_end)?;
    if checkpoints.windows(2).any(|w| w[1] < w[0]) || checkpoints.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::contract("checkpoints must be sorted within [0, t_end]"));
    }
    if n_paths < 2 {
        return Err(Error::contract("need at least two paths"));
    }
    let summaries: Vec<PathSummary> =
        (0..n_paths).into_par_iter().map(|i| summarize_stream(params, t_end, checkpoints, seed, i as u64)).collect();
    let mut mean = Vec::with_capacity(checkpoints.len());
    let mut stderr = Vec::with_capacity(checkpoints.len());
    for k in 0..checkpoints.len() {
        let xs: Vec<f64> = summaries.iter().map(|s| s.at_checkpoints[k] as f64).collect();
        mean.push(stats::mean(&xs));
        stderr.push((stats::variance(&xs) / xs.len() as f64).sqrt());
    }
    Ok(PopulationEnsemble { params: *params, t_end, checkpoints: checkpoints.to_vec(), summaries, mean, stderr })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub births: u64,
    pub deaths: u64,
    pub exposure: f64,
    pub confidence: f64,
    /// Births per unit population-time, exact Poisson interval.
    pub g_hat: Estimate,
    pub delta_hat: Estimate,
    /// `g_hat - delta_hat`, normal interval.
    pub net_rate: Estimate,
    /// Least-squares slope of `ln mean n(t)` over the checkpoints.
    pub log_linear_slope: Option<f64>,
}

/// Exact (Garwood) interval for a Poisson mean given `k` events.
pub fn poisson_interval(k: u64, confidence: f64) -> Interval {
    let alpha = 1.0 - confidence;
    let lo = if k == 0 {
        0.0
    } else {
        0.5 * ChiSquared::new(2.0 * k as f64).expect("positive dof").inverse_cdf(alpha / 2.0)
    };
    let hi = 0.5 * ChiSquared::new(2.0 * k as f64 + 2.0).expect("positive dof").inverse_cdf(1.0 - alpha / 2.0);
    Interval::new(lo, hi)
}

fn normal_quantile(confidence: f64) -> f64 {
    use statrs::distribution::Normal;
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + 0.5 * confidence)
}

/// Rate estimates from event counts over integrated population-time.
pub fn fit_growth_summaries(summaries: &[PathSummary], checkpoints: &[f64], confidence: f64) -> Result<GrowthFit> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::contract("confidence must lie in (0, 1)"));
    }
    let births: u64 = summaries.iter().map(|s| s.births).sum();
    let deaths: u64 = summaries.iter().map(|s| s.deaths).sum();
    if births + deaths < MIN_EVENTS {
        return Err(Error::Inconclusive(format!("{} events, need at least {MIN_EVENTS}", births + deaths)));
    }
    let exposure: f64 = summaries.iter().map(|s| s.exposure).sum();
    let rate = |k: u64| {
        let ci = poisson_interval(k, confidence);
        Estimate {
            value: k as f64 / exposure,
            stderr: (k as f64).sqrt() / exposure,
            ci: Interval::new(ci.lo / exposure, ci.hi / exposure),
        }
    };
    let g_hat = rate(births);
    let delta_hat = rate(deaths);
    let net = g_hat.value - delta_hat.value;
    let se = ((births + deaths) as f64).sqrt() / exposure;
    let z = normal_quantile(confidence);
    let net_rate = Estimate { value: net, stderr: se, ci: Interval::new(net - z * se, net + z * se) };

    let mut pts = Vec::new();
    for (k, &t) in checkpoints.iter().enumerate() {
        let m = summaries.iter().map(|s| s.at_checkpoints[k] as f64).sum::<f64>() / summaries.len() as f64;
        if m > 0.0 {
            pts.push((t, m.ln()));
        }
    }
    let log_linear_slope = (pts.len() >= 2).then(|| {
        let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        stats::covariance(&ts, &ys) / stats::variance(&ts)
    });
    Ok(GrowthFit { births, deaths, exposure, confidence, g_hat, delta_hat, net_rate, log_linear_slope })
}

/// [`fit_growth_summaries`] on stored paths, cross-checked at five
/// checkpoints spanning the common horizon.
pub fn fit_growth(paths: &[PopulationPath], confidence: f64) -> Result<GrowthFit> {
    let t_end = paths.iter().map(|p| p.t_end).fold(f64::INFINITY, f64::min);
    let checkpoints: Vec<f64> =
        if t_end.is_finite() { (0..5).map(|k| t_end * k as f64 / 4.0).collect() } else { vec![] };
    let summaries: Vec<PathSummary> = paths.iter().map(|p| p.summary(&checkpoints)).collect();
    fit_growth_summaries(&summaries, &checkpoints, confidence)
}

/// `beta dq + ds_int >= ln(g / delta)`; only the ratio `g / delta` enters.
pub fn check_growth_bound(params: &ReplicatorParams) -> Result<BoundReport> {
    if !(params.g > 0.0 && params.delta > 0.0 && params.g.is_finite() && params.delta.is_finite()) {
        return Err(Error::contract("growth bound needs positive finite g and delta"));
    }
    let ratio = params.g / params.delta;
    let lhs = params.beta * params.delta_q + params.delta_s_int;
    let rhs = ratio.ln();
    let inputs: BTreeMap<String, f64> = [
        ("g", params.g),
        ("delta", params.delta),
        ("g_over_delta", ratio),
        ("beta", params.beta),
        ("delta_q", params.delta_q),
        ("delta_s_int", params.delta_s_int),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect();
    let mut report = BoundReport::inequality(Relation::GrowthBound, lhs, rhs, 1e-12, inputs);
    if !report.satisfied {
        report.note = Some(format!(
            "inputs are thermodynamically inconsistent: ln(g/delta) exceeds beta dq + ds_int by {:e}",
            -report.slack
        ));
    }
    Ok(report)
}

/// Parameters with `g / delta = f exp(beta dq + ds_int)` and `delta = 1`,
/// so the growth bound holds with slack `-ln f`.
pub fn couple_rates(beta: f64, delta_q: f64, delta_s_int: f64, f: f64, n0: u64) -> Result<ReplicatorParams> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::contract(format!("irreversibility factor {f} outside (0, 1]")));
    }
    let lhs = beta * delta_q + delta_s_int;
    let g = f * lhs.exp();
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::contract("coupled birth rate is not a positive finite number"));
    }
    Ok(ReplicatorParams { g, delta: 1.0, n0, beta, delta_q, delta_s_int })
}

/// [`couple_rates`] fed by the outputs of an entropy-equality run.
pub fn couple_to_detbal(thermo: &EqualityReport, f: f64) -> Result<ReplicatorParams> {
    couple_rates(thermo.beta, thermo.mean_heat, thermo.delta_s_int, f, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yule_mean_is_e() {
        let p = ReplicatorParams::new(1.0, 0.0, 1);
        let ens = simulate_ensemble(&p, 1.0, 10_000, &[1.0], 11).unwrap();
        assert!(
            (ens.mean[0] - std::f64::consts::E).abs() <= 3.0 * ens.stderr[0],
            "{} +- {}",
            ens.mean[0],
            ens.stderr[0]
        );
    }

    #[test]
    fn pure_death_never_grows() {
        let p = ReplicatorParams::new(0.0, 1.0, 20);
        for path in simulate_paths(&p, 3.0, 50, 2).unwrap() {
            let mut prev = path.n0;
            for &n in &path.sizes {
                assert!(n < prev);
                prev = n;
            }
        }
    }

    #[test]
    fn birth_death_mean() {
        let p = ReplicatorParams::new(1.0, 0.5, 100);
        let cps = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ens = simulate_ensemble(&p, 5.0, 10_000, &cps, 5).unwrap();
        assert!((p.mean_population(5.0) - 1218.25).abs() < 0.01);
        assert!(ens.max_z_score() <= 3.0, "{}", ens.max_z_score());
        // Standard errors agree with the closed-form variance.
        let sd = (p.population_variance(5.0) / 10_000.0).sqrt();
        assert!((ens.stderr[4] / sd - 1.0).abs() < 0.1);
    }

    #[test]
    fn path_invariants() {
        let p = ReplicatorParams::new(1.0, 1.0, 5);
        let path = simulate_population(&p, 4.0, 9).unwrap();
        let mut prev = path.n0 as i64;
        for w in path.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        for &n in &path.sizes {
            assert_eq!((n as i64 - prev).abs(), 1);
            prev = n as i64;
        }
        if let Some(&last) = path.sizes.last() {
            if last == 0 {
                assert_eq!(path.sizes.iter().filter(|&&n| n == 0).count(), 1);
            }
        }
        // Stored and streamed summaries agree.
        let cps = [0.5, 1.0, 3.9];
        let a = path.summary(&cps);
        let b = summarize_stream(&p, 4.0, &cps, 9, 0);
        assert_eq!(a.births, b.births);
        assert_eq!(a.at_checkpoints, b.at_checkpoints);
        assert!((a.exposure - b.exposure).abs() < 1e-9);
    }

    #[test]
    fn synthetic_rate() {
        let s = PathSummary { births: 50, deaths: 0, exposure: 100.0, at_checkpoints: vec![], final_population: 51 };
        let fit = fit_growth_summaries(&[s], &[], 0.95).unwrap();
        assert_eq!(fit.g_hat.value, 0.5);
        assert_eq!(fit.delta_hat.value, 0.0);
        assert_eq!(fit.delta_hat.ci.lo, 0.0);
        assert!(fit.g_hat.ci.contains(0.5));
    }

    #[test]
    fn garwood_reference_values() {
        // Tabulated exact 95% limits for k = 0 and k = 10.
        let i0 = poisson_interval(0, 0.95);
        assert!((i0.hi - 3.6889).abs() < 1e-3);
        let i10 = poisson_interval(10, 0.95);
        assert!((i10.lo - 4.7954).abs() < 1e-3 && (i10.hi - 18.3904).abs() < 1e-3);
    }

    #[test]
    fn too_few_events_is_inconclusive() {
        let s = PathSummary { births: 4, deaths: 5, exposure: 10.0, at_checkpoints: vec![], final_population: 1 };
        assert!(matches!(fit_growth_summaries(&[s], &[], 0.95), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn balanced_rates_net_zero() {
        let p = ReplicatorParams::new(1.0, 1.0, 10);
        let ens = simulate_ensemble(&p, 1.0, 10_000, &[0.25, 0.5, 0.75, 1.0], 3).unwrap();
        let fit = fit_growth_summaries(&ens.summaries, &ens.checkpoints, 0.95).unwrap();
        assert!(fit.net_rate.ci.contains(0.0), "{:?}", fit.net_rate);
    }

    #[test]
    fn no_deaths_gives_exact_zero() {
        let p = ReplicatorParams::new(1.0, 0.0, 3);
        let paths = simulate_paths(&p, 2.0, 20, 4).unwrap();
        let fit = fit_growth(&paths, 0.95).unwrap();
        assert_eq!(fit.deaths, 0);
        assert_eq!(fit.delta_hat.value, 0.0);
    }

    #[test]
    fn fit_recovers_rates_on_grid() {
        // Family-wise 95% over 18 intervals (Bonferroni).
        let confidence = 1.0 - 0.05 / 18.0;
        for (i, &g) in [0.5, 1.0, 2.0].iter().enumerate() {
            for (j, &d) in [0.5, 1.0, 2.0].iter().enumerate() {
                let p = ReplicatorParams::new(g, d, 50);
                let ens = simulate_ensemble(&p, 1.0, 400, &[0.5, 1.0], (10 * i + j) as u64).unwrap();
                let fit = fit_growth_summaries(&ens.summaries, &ens.checkpoints, confidence).unwrap();
                assert!(fit.g_hat.ci.contains(g), "g={g} d={d}: {:?}", fit.g_hat);
                assert!(fit.delta_hat.ci.contains(d), "g={g} d={d}: {:?}", fit.delta_hat);
                let slope = fit.log_linear_slope.unwrap();
                assert!((slope - (g - d)).abs() < 0.2, "{slope}");
            }
        }
    }

    fn with_lhs(g: f64, delta: f64, lhs: f64) -> ReplicatorParams {
        ReplicatorParams { g, delta, n0: 1, beta: 1.0, delta_q: lhs, delta_s_int: 0.0 }
    }

    #[test]
    fn growth_bound_examples() {
        let e3 = 3f64.exp();
        let r = check_growth_bound(&with_lhs(e3, 1.0, 3.0)).unwrap();
        assert!(r.slack.abs() < 1e-12 && r.satisfied);
        let r = check_growth_bound(&with_lhs(0.5 * e3, 1.0, 3.0)).unwrap();
        assert!((r.slack - 2f64.ln()).abs() < 1e-12 && r.satisfied);
        let r = check_growth_bound(&with_lhs(4f64.exp(), 1.0, 3.0)).unwrap();
        assert!(!r.satisfied && r.note.is_some());
        assert!(check_growth_bound(&with_lhs(0.0, 1.0, 3.0)).is_err());
        assert!(check_growth_bound(&with_lhs(1.0, -1.0, 3.0)).is_err());
    }

    #[test]
    fn bound_sees_only_the_ratio() {
        for (g, d) in [(2.0, 0.5), (1.25, 3.0), (0.75, 0.125)] {
            let a = check_growth_bound(&with_lhs(g, d, 1.5)).unwrap();
            let b = check_growth_bound(&with_lhs(7.0 * g, 7.0 * d, 1.5)).unwrap();
            assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());
            assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
            assert_eq!(a.slack.to_bits(), b.slack.to_bits());
            assert_eq!(a.satisfied, b.satisfied);
            assert_eq!(a.inputs["g_over_delta"].to_bits(), b.inputs["g_over_delta"].to_bits());
        }
    }

    #[test]
    fn coupling_slack_is_minus_ln_f() {
        for f in [1.0, 0.9, 0.5, 0.1] {
            let p = couple_rates(0.8, 1.3, -0.4, f, 1).unwrap();
            let r = check_growth_bound(&p).unwrap();
            assert!((r.slack + f64::ln(f)).abs() < 1e-12, "{f}: {}", r.slack);
            assert!(r.satisfied);
        }
        assert!(couple_rates(1.0, 1.0, 0.0, 0.0, 1).is_err());
        assert!(couple_rates(1.0, 1.0, 0.0, 1.5, 1).is_err());
    }

    #[test]
    fn coupling_flat_box_values() {
        // beta <dQ> = 1, dS_int = -ln 2.
        let p = couple_rates(1.0, 1.0, -(2f64.ln()), 1.0, 1).unwrap();
        assert!((p.g / p.delta - std::f64::consts::E / 2.0).abs() < 1e-12);
    }

    #[test]
    fn determinism_and_csv() {
        let p = ReplicatorParams::new(1.0, 0.3, 4);
        let a = simulate_paths(&p, 2.0, 8, 77).unwrap();
        let b = simulate_paths(&p, 2.0, 8, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], simulate_population(&p, 2.0, 77).unwrap());
        let mut buf = Vec::new();
        a[0].write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,n\n0,4\n"));
        assert_eq!(text.lines().count(), a[0].times.len() + 3);
    }
}
