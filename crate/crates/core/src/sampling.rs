//! Markov chain samplers for the thickened energy shell and the
//! configurational Gibbs ensemble, both optionally restricted to a
//! macrostate, plus quadrature for low-dimensional partition functions.

use std::cell::RefCell;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Flow;
use crate::error::{Error, Result};
use crate::model::{ConditioningContext, HamiltonianModel, Modifier, PhasePoint};
use crate::quadrature::{self, QuadResult};
use crate::rng::{self, StreamRng};
use crate::states::{Macrostate, Region};
use crate::stats::{self, Estimate, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleKind {
    /// Uniform on `|H - energy| <= width / 2`.
    Microcanonical { energy: f64, width: f64 },
    /// Configurational Gibbs density `exp(-beta U)`.
    Canonical { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    #[serde(default)]
    pub restriction: Option<Macrostate>,
}

impl EnsembleSpec {
    /// Shell with the default thickness `0.01 * |E|` (at least 1e-3).
    pub fn shell(energy: f64) -> Self {
        EnsembleSpec {
            kind: EnsembleKind::Microcanonical { energy, width: (1e-2 * energy.abs()).max(1e-3) },
            restriction: None,
        }
    }

    pub fn canonical(beta: f64) -> Self {
        EnsembleSpec { kind: EnsembleKind::Canonical { beta }, restriction: None }
    }

    pub fn restricted(mut self, m: Macrostate) -> Self {
        self.restriction = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EnsembleKind::Microcanonical { energy, width } => {
                if !energy.is_finite() || !(width > 0.0 && width.is_finite()) {
                    return Err(Error::contract("shell needs finite E and positive width"));
                }
            }
            EnsembleKind::Canonical { beta } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(Error::contract("beta must be positive"));
                }
            }
        }
        if let Some(m) = &self.restriction {
            m.validate()?;
        }
        Ok(())
    }

    fn admits_q(&self, q: &[f64]) -> bool {
        self.restriction.as_ref().is_none_or(|m| m.contains(q))
    }

    /// Pure membership predicate for a phase point (momenta are ignored
    /// for canonical ensembles).
    pub fn admits(&self, model: &HamiltonianModel, modifier: &Modifier, s: &PhasePoint) -> bool {
        if !self.admits_q(&s.q) {
            return false;
        }
        match self.kind {
            EnsembleKind::Microcanonical { energy, width } => {
                let h = model.energy_unchecked(s, modifier);
                h.is_finite() && (h - energy).abs() <= 0.5 * width
            }
            EnsembleKind::Canonical { .. } => model.potential_unchecked(&s.q, modifier).is_finite(),
        }
    }
}

/// Involutive swap proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SwapMove {
    /// `q -> 2 center - q`, with every bath coordinate reflected about
    /// its equilibrium position at `center`. Momenta are unchanged.
    Reflect { center: f64 },
}

impl SwapMove {
    pub fn apply(&self, model: &HamiltonianModel, q: &mut [f64]) {
        match *self {
            SwapMove::Reflect { center } => {
                q[0] = 2.0 * center - q[0];
                for (x, m) in q[1..].iter_mut().zip(model.bath()) {
                    *x = 2.0 * m.coupling * center / (m.frequency * m.frequency) - *x;
                }
            }
        }
    }
}

/// Deterministic move: `steps` leapfrog steps then a momentum flip,
/// followed unconditionally by a second flip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsMove {
    pub steps: usize,
    pub dt: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Random-walk step per coordinate (one entry broadcasts). On the
    /// shell the same scale is used for the conjugate momentum.
    pub proposal_scale: Vec<f64>,
    pub n_burnin: usize,
    /// Samples per chain.
    pub n_samples: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default)]
    pub swap_move: Option<SwapMove>,
    #[serde(default = "default_swap_probability")]
    pub swap_probability: f64,
    #[serde(default)]
    pub dynamics_move: Option<DynamicsMove>,
    /// Chance per shell iteration of reversing all momenta, which joins
    /// disjoint momentum bands.
    #[serde(default = "default_flip_probability")]
    pub momentum_flip_probability: f64,
    /// Boundary configuration; defaults to the first in the context.
    #[serde(default)]
    pub boundary: Option<String>,
    #[serde(default = "default_min_crossings")]
    pub min_crossings: usize,
}

fn one() -> usize {
    1
}

fn default_swap_probability() -> f64 {
    0.2
}

fn default_flip_probability() -> f64 {
    0.5
}

fn default_min_crossings() -> usize {
    100
}

impl SamplerConfig {
    pub fn new(scale: f64, n_burnin: usize, n_samples: usize, seed: u64) -> Self {
        SamplerConfig {
            proposal_scale: vec![scale],
            n_burnin,
            n_samples,
            thinning: 1,
            seed,
            stream: 0,
            chains: 1,
            swap_move: None,
            swap_probability: default_swap_probability(),
            dynamics_move: None,
            momentum_flip_probability: default_flip_probability(),
            boundary: None,
            min_crossings: default_min_crossings(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_samples == 0 || self.thinning == 0 || self.chains == 0 {
            return Err(Error::contract("n_samples, thinning and chains must be positive"));
        }
        if !(self.proposal_scale.len() == 1 || self.proposal_scale.len() == dim) {
            return Err(Error::Dimension { expected: dim, got: self.proposal_scale.len() });
        }
        if self.proposal_scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::contract("proposal scales must be positive"));
        }
        if !(0.0..=1.0).contains(&self.swap_probability) || !(0.0..=1.0).contains(&self.momentum_flip_probability) {
            return Err(Error::contract("move probabilities must lie in [0, 1]"));
        }
        if let Some(d) = &self.dynamics_move {
            let total = d.probability + if self.swap_move.is_some() { self.swap_probability } else { 0.0 };
            if !(d.dt > 0.0) || d.steps == 0 || !(0.0..=1.0).contains(&d.probability) || total > 1.0 {
                return Err(Error::contract("bad dynamics move"));
            }
        }
        Ok(())
    }

    fn scale(&self, i: usize) -> f64 {
        if self.proposal_scale.len() == 1 {
            self.proposal_scale[0]
        } else {
            self.proposal_scale[i]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Integrated autocorrelation time of the reaction coordinate,
    /// averaged over chains, in units of recorded samples.
    pub tau_q0: f64,
    /// Same for the potential energy.
    pub tau_energy: f64,
    pub effective_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    /// Chains concatenated in chain order.
    pub points: Vec<PhasePoint>,
    /// Momenta are zero and meaningless for configurational samples.
    pub position_only: bool,
    pub weights: Vec<f64>,
    pub chain_lengths: Vec<usize>,
    pub acceptance_rate: f64,
    pub diagnostics: Diagnostics,
    pub boundary: String,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Per-chain slices of the points.
    pub fn chains(&self) -> Vec<&[PhasePoint]> {
        let mut out = Vec::with_capacity(self.chain_lengths.len());
        let mut start = 0;
        for &n in &self.chain_lengths {
            out.push(&self.points[start..start + n]);
            start += n;
        }
        out
    }

    pub fn reaction_coordinate(&self) -> Vec<f64> {
        self.points.iter().map(|s| s.q[0]).collect()
    }

    /// One row per sample with `#`-prefixed metadata lines first.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[(&str, String)]) -> Result<()> {
        for (k, v) in metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "# boundary: {}", self.boundary)?;
        writeln!(w, "# acceptance_rate: {}", self.acceptance_rate)?;
        let dim = self.points.first().map_or(0, |s| s.dim());
        let mut cols: Vec<String> = vec!["chain".into()];
        cols.extend((0..dim).map(|i| format!("q{i}")));
        if !self.position_only {
            cols.extend((0..dim).map(|i| format!("p{i}")));
        }
        cols.push("weight".into());
        writeln!(w, "{}", cols.join(","))?;
        let mut idx = 0;
        for (c, chain) in self.chains().iter().enumerate() {
            for s in chain.iter() {
                let mut row = vec![c.to_string()];
                row.extend(s.q.iter().map(|x| x.to_string()));
                if !self.position_only {
                    row.extend(s.p.iter().map(|x| x.to_string()));
                }
                row.push(self.weights[idx].to_string());
                writeln!(w, "{}", row.join(","))?;
                idx += 1;
            }
        }
        Ok(())
    }
}

/// Reaction-coordinate interval on which the potential is finite.
pub(crate) fn clip_to_support(model: &HamiltonianModel, lo: f64, hi: f64) -> (f64, f64) {
    let r = model.reaction();
    let breaks = r.breakpoints();
    let mut lo = lo;
    let mut hi = hi;
    if let (Some(&first), Some(&last)) = (breaks.first(), breaks.last()) {
        if r.value_in_piece(0, first).is_infinite() {
            lo = lo.max(first);
        }
        if r.value_in_piece(breaks.len(), last).is_infinite() {
            hi = hi.min(last);
        }
    }
    (lo, hi)
}

/// Lowest-potential admissible configuration on a grid over the
/// reaction coordinate, bath modes at (or nearest to) equilibrium.
fn lowest_configuration(model: &HamiltonianModel, modifier: &Modifier, spec: &EnsembleSpec) -> Option<Vec<f64>> {
    const GRID: usize = 401;
    const REACH: f64 = 10.0;
    let regions: Vec<Region> = match &spec.restriction {
        Some(m) => m.substates.clone(),
        None => vec![Region::everything("all")],
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for region in &regions {
        let (lo, hi) = region.range(0);
        let (lo, hi) = clip_to_support(model, lo.max(-REACH), hi.min(REACH));
        if !(lo < hi) {
            continue;
        }
        for i in 0..GRID {
            let mut q = vec![0.0; model.dim()];
            q[0] = lo + (hi - lo) * (i as f64 + 0.5) / GRID as f64;
            for (j, m) in model.bath().iter().enumerate() {
                let eq = m.coupling * q[0] / (m.frequency * m.frequency);
                let (a, b) = region.range(j + 1);
                q[j + 1] = if eq >= a && eq < b {
                    eq
                } else if a.is_finite() && b.is_finite() {
                    0.5 * (a + b)
                } else if a.is_finite() {
                    a
                } else {
                    b - 1e-9 * b.abs().max(1.0)
                };
            }
            if !spec.admits_q(&q) {
                continue;
            }
            let u = model.potential_unchecked(&q, modifier);
            if u.is_finite() && best.as_ref().is_none_or(|(bu, _)| u < *bu) {
                best = Some((u, q));
            }
        }
    }
    best.map(|(_, q)| q)
}

fn initial_point(model: &HamiltonianModel, modifier: &Modifier, spec: &EnsembleSpec) -> Result<PhasePoint> {
    let label = || spec.restriction.as_ref().map_or("unrestricted".to_string(), |m| m.label.clone());
    let q = lowest_configuration(model, modifier, spec).ok_or_else(|| Error::EmptyRestriction(label()))?;
    let dim = model.dim();
    match spec.kind {
        EnsembleKind::Canonical { .. } => Ok(PhasePoint::at_rest(q)),
        EnsembleKind::Microcanonical { energy, width } => {
            let u = model.potential_unchecked(&q, modifier);
            let k = energy - u;
            if k < -0.5 * width {
                return Err(Error::ShellUnreachable(format!(
                    "lowest potential {u} in `{}` lies above the shell at {energy}",
                    label()
                )));
            }
            let share = k.max(0.0) / dim as f64;
            let p = (0..dim).map(|i| (2.0 * share * model.mass(i)).sqrt()).collect();
            let s = PhasePoint { q, p };
            if !spec.admits(model, modifier, &s) {
                return Err(Error::ShellUnreachable(label()));
            }
            Ok(s)
        }
    }
}

struct ChainOutput {
    points: Vec<PhasePoint>,
    accepted: u64,
    proposed: u64,
}

struct Chain<'a> {
    model: &'a HamiltonianModel,
    modifier: &'a Modifier,
    spec: &'a EnsembleSpec,
    cfg: &'a SamplerConfig,
    rng: StreamRng,
    state: PhasePoint,
    /// Cached potential (canonical) for Metropolis ratios.
    u: f64,
}

impl Chain<'_> {
    fn beta(&self) -> Option<f64> {
        match self.spec.kind {
            EnsembleKind::Canonical { beta } => Some(beta),
            EnsembleKind::Microcanonical { .. } => None,
        }
    }

    /// Accept/reject a proposed point; returns whether it was accepted.
    fn consider(&mut self, proposal: PhasePoint) -> bool {
        match self.beta() {
            None => {
                if self.spec.admits(self.model, self.modifier, &proposal) {
                    self.state = proposal;
                    true
                } else {
                    false
                }
            }
            Some(beta) => {
                if !self.spec.admits_q(&proposal.q) {
                    return false;
                }
                let u = self.model.potential_unchecked(&proposal.q, self.modifier);
                if !u.is_finite() {
                    return false;
                }
                let d = beta * (u - self.u);
                if d <= 0.0 || self.rng.random::<f64>() < (-d).exp() {
                    self.state = proposal;
                    self.u = u;
                    true
                } else {
                    false
                }
            }
        }
    }

    /// One sweep of single-coordinate random-walk proposals.
    fn sweep(&mut self) -> (u64, u64) {
        let dim = self.model.dim();
        let momenta = self.beta().is_none();
        let mut acc = 0;
        let coords = if momenta { 2 * dim } else { dim };
        for c in 0..coords {
            let mut prop = self.state.clone();
            let i = c % dim;
            let step = self.cfg.scale(i) * self.rng.sample::<f64, _>(StandardNormal);
            if c < dim {
                prop.q[i] += step;
            } else {
                prop.p[i] += step;
            }
            if self.consider(prop) {
                acc += 1;
            }
        }
        (acc, coords as u64)
    }

    fn swap(&mut self, mv: &SwapMove) {
        let mut prop = self.state.clone();
        mv.apply(self.model, &mut prop.q);
        self.consider(prop);
    }

    fn dynamics(&mut self, mv: &DynamicsMove) {
        let flow = Flow::new(self.model, self.modifier, mv.dt);
        let Ok((mut end, _, _)) = flow.run(&self.state, mv.steps, |_, _, _| {}) else {
            flip(&mut self.state);
            return;
        };
        flip(&mut end);
        self.consider(end);
        flip(&mut self.state);
    }

    fn iterate(&mut self) -> (u64, u64) {
        let cfg = self.cfg;
        if self.beta().is_none() && self.rng.random::<f64>() < cfg.momentum_flip_probability {
            flip(&mut self.state);
        }
        let r: f64 = self.rng.random();
        let mut threshold = 0.0;
        if let Some(mv) = &cfg.swap_move {
            threshold += cfg.swap_probability;
            if r < threshold {
                self.swap(mv);
                return (0, 0);
            }
        }
        if let Some(mv) = &cfg.dynamics_move {
            if self.beta().is_none() {
                threshold += mv.probability;
                if r < threshold {
                    self.dynamics(mv);
                    return (0, 0);
                }
            }
        }
        self.sweep()
    }

    fn run(mut self) -> Result<ChainOutput> {
        let mut burn_acc = 0;
        for _ in 0..self.cfg.n_burnin {
            burn_acc += self.iterate().0;
        }
        if self.cfg.n_burnin > 0 && burn_acc == 0 {
            return Err(Error::ShellUnreachable("no proposal accepted during burn-in".into()));
        }
        let mut points = Vec::with_capacity(self.cfg.n_samples);
        let mut accepted = 0;
        let mut proposed = 0;
        for _ in 0..self.cfg.n_samples {
            for _ in 0..self.cfg.thinning {
                let (a, p) = self.iterate();
                accepted += a;
                proposed += p;
            }
            points.push(self.state.clone());
        }
        Ok(ChainOutput { points, accepted, proposed })
    }
}

fn flip(s: &mut PhasePoint) {
    for p in &mut s.p {
        *p = -*p;
    }
}

fn sample(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    spec: &EnsembleSpec,
    cfg: &SamplerConfig,
) -> Result<SampleBatch> {
    spec.validate()?;
    cfg.validate(model.dim())?;
    if let Some(m) = &spec.restriction {
        m.check_dim(model.dim())?;
    }
    let boundary = cfg.boundary.clone().unwrap_or_else(|| ctx.first_label().to_string());
    let modifier = ctx.modifier(&boundary)?;
    let start = initial_point(model, modifier, spec)?;
    let u0 = model.potential_unchecked(&start.q, modifier);
    let outputs: Vec<ChainOutput> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            Chain {
                model,
                modifier,
                spec,
                cfg,
                rng: rng::stream(cfg.seed, rng::substream(cfg.stream, c as u64)),
                state: start.clone(),
                u: u0,
            }
            .run()
        })
        .collect::<Result<_>>()?;

    let accepted: u64 = outputs.iter().map(|o| o.accepted).sum();
    let proposed: u64 = outputs.iter().map(|o| o.proposed).sum();
    let mean_tau = |f: &dyn Fn(&PhasePoint) -> f64| {
        let taus: Vec<f64> = outputs
            .iter()
            .map(|o| stats::integrated_autocorr_time(&o.points.iter().map(f).collect::<Vec<_>>()))
            .collect();
        stats::mean(&taus)
    };
    let tau_q0 = mean_tau(&|s| s.q[0]);
    let tau_energy = mean_tau(&|s| model.potential_unchecked(&s.q, modifier));
    let chain_lengths: Vec<usize> = outputs.iter().map(|o| o.points.len()).collect();
    let points: Vec<PhasePoint> = outputs.into_iter().flat_map(|o| o.points).collect();
    let n = points.len();
    Ok(SampleBatch {
        weights: vec![1.0 / n as f64; n],
        position_only: matches!(spec.kind, EnsembleKind::Canonical { .. }),
        chain_lengths,
        acceptance_rate: if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 },
        diagnostics: Diagnostics { tau_q0, tau_energy, effective_size: n as f64 / tau_q0 },
        boundary,
        points,
    })
}

/// Metropolis sampling of the thickened energy shell.
pub fn sample_microcanonical(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    spec: &EnsembleSpec,
    cfg: &SamplerConfig,
) -> Result<SampleBatch> {
    if !matches!(spec.kind, EnsembleKind::Microcanonical { .. }) {
        return Err(Error::contract("sample_microcanonical needs a microcanonical ensemble"));
    }
    sample(model, ctx, spec, cfg)
}

/// Configurational Metropolis sampling of `exp(-beta U)`.
pub fn sample_canonical(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    spec: &EnsembleSpec,
    cfg: &SamplerConfig,
) -> Result<SampleBatch> {
    if !matches!(spec.kind, EnsembleKind::Canonical { .. }) {
        return Err(Error::contract("sample_canonical needs a canonical ensemble"));
    }
    sample(model, ctx, spec, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tolerance: 1e-10 }
    }
}

/// `int_region f(U(q)) dq` for models with at most two configuration
/// coordinates.
pub(crate) fn region_integral(
    model: &HamiltonianModel,
    modifier: &Modifier,
    region: &Region,
    opts: &QuadratureOptions,
    f: impl Fn(f64) -> f64,
) -> Result<QuadResult> {
    region.check_dim(model.dim())?;
    let tol = opts.tolerance;
    let (lo, hi) = region.range(0);
    let (lo, hi) = clip_to_support(model, lo, hi);
    if !(lo < hi) {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let breaks = model.reaction().breakpoints();
    match model.dim() {
        1 => quadrature::integrate_with_breaks(|x| f(model.potential_unchecked(&[x], modifier)), lo, hi, breaks, tol),
        2 => {
            let (a, b) = region.range(1);
            let inner_tol = 0.1 * tol;
            let failure: RefCell<Option<Error>> = RefCell::new(None);
            let outer = quadrature::integrate_with_breaks(
                |x| {
                    if failure.borrow().is_some() {
                        return 0.0;
                    }
                    match quadrature::integrate(|y| f(model.potential_unchecked(&[x, y], modifier)), a, b, inner_tol) {
                        Ok(r) => r.value,
                        Err(e) => {
                            *failure.borrow_mut() = Some(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
                breaks,
                tol,
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(QuadResult { value: outer.value, error: outer.error + inner_tol * outer.value.abs().max(1.0) })
        }
        d => Err(Error::Precondition(format!("quadrature path needs dimension <= 2, model has {d}"))),
    }
}

/// `sum_Y w_Y int_region exp(-beta U(q|Y)) dq` by adaptive quadrature.
pub fn partition_function_quadrature(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    region: &Region,
    opts: &QuadratureOptions,
) -> Result<QuadResult> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::contract("beta must be positive"));
    }
    let mut total = QuadResult { value: 0.0, error: 0.0 };
    for cfg in ctx.configs() {
        let r = region_integral(model, &cfg.modifier, region, opts, |u| (-beta * u).exp())?;
        total.value += cfg.weight * r.value;
        total.error += cfg.weight * r.error;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRatio {
    /// `count_a / count_b` with a log-odds interval.
    pub ratio: Estimate,
    pub count_a: usize,
    pub count_b: usize,
    pub count_neither: usize,
    pub crossings: usize,
    pub effective_size: f64,
}

/// Ratio of the ensemble measures of `a` and `b` from one mixed run.
pub fn volume_ratio_on_shell(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    spec: &EnsembleSpec,
    a: &Macrostate,
    b: &Macrostate,
    cfg: &SamplerConfig,
) -> Result<VolumeRatio> {
    a.check_dim(model.dim())?;
    b.check_dim(model.dim())?;
    if a == b {
        let batch = sample(model, ctx, spec, cfg)?;
        let n = batch.points.iter().filter(|s| a.contains(&s.q)).count();
        return Ok(VolumeRatio {
            ratio: Estimate::exact(1.0),
            count_a: n,
            count_b: n,
            count_neither: batch.len() - n,
            crossings: 0,
            effective_size: n as f64,
        });
    }
    let batch = sample(model, ctx, spec, cfg)?;
    let mut count_a = 0;
    let mut count_b = 0;
    let mut crossings = 0;
    let mut indicators: Vec<Vec<f64>> = Vec::new();
    for chain in batch.chains() {
        let mut last: Option<bool> = None;
        let mut ind = Vec::new();
        for s in chain {
            let label = if a.contains(&s.q) {
                count_a += 1;
                Some(true)
            } else if b.contains(&s.q) {
                count_b += 1;
                Some(false)
            } else {
                None
            };
            if let Some(l) = label {
                if last.is_some_and(|prev| prev != l) {
                    crossings += 1;
                }
                last = Some(l);
                ind.push(if l { 1.0 } else { 0.0 });
            }
        }
        indicators.push(ind);
    }
    if crossings < cfg.min_crossings {
        return Err(Error::InsufficientExchange { crossings, required: cfg.min_crossings });
    }
    let refs: Vec<&[f64]> = indicators.iter().map(|v| v.as_slice()).collect();
    let n_eff = stats::effective_size(&refs);
    let total = (count_a + count_b) as f64;
    let p = count_a as f64 / total;
    let r = count_a as f64 / count_b as f64;
    let se_log = (1.0 / (n_eff * p * (1.0 - p))).sqrt();
    Ok(VolumeRatio {
        ratio: Estimate {
            value: r,
            stderr: r * se_log,
            ci: Interval::new(r * (-stats::Z95 * se_log).exp(), r * (stats::Z95 * se_log).exp()),
        },
        count_a,
        count_b,
        count_neither: batch.len() - count_a - count_b,
        crossings,
        effective_size: n_eff,
    })
}
