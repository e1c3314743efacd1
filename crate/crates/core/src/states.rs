//! Metastable regions, macrostates, and the equilibrium functionals of
//! their restricted ensembles.
//!
//! Sign conventions: `delta_s_int = S(II) - S(I)` and
//! `mean_heat_released = <U>_I - <U>_II`, so that
//! `ln(Z_I / Z_II) = -delta_s_int - beta * mean_heat_released`.
//!
//! Entropies are configurational. A momentum factor would multiply every
//! restricted partition function by the same constant (kinetic forms do
//! not depend on the region), shifting every entropy equally, so it drops
//! out of all I/II differences.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConditioningContext, HamiltonianModel, Modifier};
use crate::rng;
use crate::sampling::{self, QuadratureOptions};
use crate::stats::{self, Estimate};

/// Half-open bound `lo <= q[coord] < hi`; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub coord: usize,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Bound {
    pub fn lo(&self) -> f64 {
        self.lo.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn hi(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }
}

/// Axis-aligned box in configuration space. Membership never looks at
/// momenta, so every region is invariant under time reversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub label: String,
    #[serde(default)]
    pub bounds: Vec<Bound>,
}

impl Region {
    pub fn new(label: impl Into<String>, bounds: Vec<Bound>) -> Result<Self> {
        let r = Region { label: label.into(), bounds };
        r.validate()?;
        Ok(r)
    }

    /// `lo <= q[0] < hi` on the reaction coordinate.
    pub fn interval(label: impl Into<String>, lo: f64, hi: f64) -> Self {
        let opt = |x: f64| if x.is_finite() { Some(x) } else { None };
        Region { label: label.into(), bounds: vec![Bound { coord: 0, lo: opt(lo), hi: opt(hi) }] }
    }

    /// The whole configuration space.
    pub fn everything(label: impl Into<String>) -> Self {
        Region { label: label.into(), bounds: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bounds {
            if b.lo().is_nan() || b.hi().is_nan() || b.lo() >= b.hi() {
                return Err(Error::contract(format!("region `{}` has an empty bound", self.label)));
            }
        }
        Ok(())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.bounds.iter().find(|b| b.coord >= dim) {
            Some(b) => Err(Error::contract(format!(
                "region `{}` bounds coordinate {} of a {dim}-dimensional model",
                self.label, b.coord
            ))),
            None => Ok(()),
        }
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.bounds.iter().all(|b| {
            let x = q[b.coord];
            b.lo() <= x && x < b.hi()
        })
    }

    /// Interval of coordinate `coord` (intersection of all bounds on it).
    pub fn range(&self, coord: usize) -> (f64, f64) {
        self.bounds
            .iter()
            .filter(|b| b.coord == coord)
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), b| (lo.max(b.lo()), hi.min(b.hi())))
    }

    /// Whether two boxes share any point.
    pub fn intersects(&self, other: &Region) -> bool {
        let coords = self.bounds.iter().chain(&other.bounds).map(|b| b.coord);
        coords.into_iter().all(|c| {
            let (a0, a1) = self.range(c);
            let (b0, b1) = other.range(c);
            a0.max(b0) < a1.min(b1)
        })
    }

    /// Configuration-space volume, infinite if any of the first `dim`
    /// coordinates is unbounded.
    pub fn volume(&self, dim: usize) -> f64 {
        (0..dim)
            .map(|c| {
                let (lo, hi) = self.range(c);
                hi - lo
            })
            .product()
    }
}

/// Union of pairwise disjoint metastable substates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Macrostate {
    pub label: String,
    pub substates: Vec<Region>,
}

impl Macrostate {
    pub fn new(label: impl Into<String>, substates: Vec<Region>) -> Result<Self> {
        let m = Macrostate { label: label.into(), substates };
        m.validate()?;
        Ok(m)
    }

    pub fn single(region: Region) -> Self {
        Macrostate { label: region.label.clone(), substates: vec![region] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substates.is_empty() {
            return Err(Error::contract(format!("macrostate `{}` has no substates", self.label)));
        }
        for (i, a) in self.substates.iter().enumerate() {
            a.validate()?;
            for b in &self.substates[i + 1..] {
                if a.intersects(b) {
                    return Err(Error::contract(format!(
                        "substates `{}` and `{}` of `{}` overlap",
                        a.label, b.label, self.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        self.substates.iter().try_for_each(|r| r.check_dim(dim))
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.substates.iter().any(|r| r.contains(q))
    }

    pub fn substate_of(&self, q: &[f64]) -> Option<usize> {
        self.substates.iter().position(|r| r.contains(q))
    }

    /// Rejection check of disjointness: draws `n` uniform points in the
    /// joint bounding box (unbounded sides clipped to `clip`) and returns
    /// how many land in more than one substate.
    pub fn overlap_hits(&self, dim: usize, n: usize, clip: f64, seed: u64) -> usize {
        let mut rng = rng::stream(seed, 0);
        let bbox: Vec<(f64, f64)> = (0..dim)
            .map(|c| {
                self.substates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    let (a, b) = r.range(c);
                    (lo.min(a.max(-clip)), hi.max(b.min(clip)))
                })
            })
            .collect();
        let mut q = vec![0.0; dim];
        (0..n)
            .filter(|_| {
                for (x, (lo, hi)) in q.iter_mut().zip(&bbox) {
                    *x = rng.random_range(*lo..*hi);
                }
                self.substates.iter().filter(|r| r.contains(&q)).count() > 1
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// How restricted integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoOptions {
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    /// Importance samples per (substate, boundary configuration) on the
    /// Monte Carlo path.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_mc_samples() -> usize {
    200_000
}

impl Default for ThermoOptions {
    fn default() -> Self {
        ThermoOptions { tolerance: default_tol(), mc_samples: default_mc_samples(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBreakdown {
    pub label: String,
    pub weight: f64,
    /// `sum_substates Z_Y(substate)`
    pub z: f64,
    /// `<U>` under the restricted Gibbs density for this `Y`.
    pub mean_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoErrors {
    pub z: f64,
    pub mean_u: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub macrostate: String,
    pub beta: f64,
    pub z: f64,
    pub ln_z: f64,
    /// `ln Z + beta <U>`
    pub entropy: f64,
    /// `-sum_Y w_Y int rho_Y ln rho_Y dX`
    pub entropy_direct: f64,
    pub entropy_discrepancy: f64,
    pub mean_u: f64,
    pub per_boundary: Vec<BoundaryBreakdown>,
    pub method: Method,
    /// Absolute error bounds (quadrature) or 95% half-widths (Monte Carlo).
    pub errors: ThermoErrors,
    pub options: ThermoOptions,
}

/// Integrals of `f(U)` over one region for one boundary configuration.
struct Moments {
    z: f64,
    u: f64,
    z_err: f64,
    u_err: f64,
}

fn quadrature_moments(model: &HamiltonianModel, m: &Modifier, beta: f64, region: &Region, tol: f64) -> Result<Moments> {
    let opts = QuadratureOptions { tolerance: tol };
    let z = sampling::region_integral(model, m, region, &opts, |u| (-beta * u).exp())?;
    let u = sampling::region_integral(model, m, region, &opts, |u| {
        let w = (-beta * u).exp();
        if w == 0.0 {
            0.0
        } else {
            u * w
        }
    })?;
    Ok(Moments { z: z.value, u: u.value, z_err: z.error, u_err: u.error })
}

/// Importance sampling: reaction coordinate uniform on the region's
/// (finite) interval, each bath mode Gaussian around its equilibrium
/// `c q / w^2` with the canonical width, which cancels the bath Boltzmann
/// factor exactly when the modifier does not touch bath coordinates.
fn monte_carlo_moments(
    model: &HamiltonianModel,
    m: &Modifier,
    beta: f64,
    region: &Region,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<(Moments, f64)> {
    let (lo, hi) = region.range(0);
    let (lo, hi) = sampling::clip_to_support(model, lo, hi);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Precondition(format!(
            "Monte Carlo partition function needs a bounded reaction interval in `{}`",
            region.label
        )));
    }
    if samples < 2 {
        return Err(Error::contract("need at least two Monte Carlo samples"));
    }
    let mut rng = rng::stream(seed, stream);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let dim = model.dim();
    let mut q = vec![0.0; dim];
    let mut ws = Vec::with_capacity(samples);
    let mut wus = Vec::with_capacity(samples);
    for _ in 0..samples {
        q[0] = rng.random_range(lo..hi);
        let mut log_g = -(hi - lo).ln();
        for (i, mode) in model.bath().iter().enumerate() {
            let w2 = mode.frequency * mode.frequency;
            let sd = 1.0 / (beta * w2).sqrt();
            let z: f64 = std.sample(&mut rng);
            q[i + 1] = mode.coupling * q[0] / w2 + sd * z;
            log_g += -0.5 * z * z - (sd * (2.0 * std::f64::consts::PI).sqrt()).ln();
        }
        let (w, wu) = if region.contains(&q) {
            let u = model.potential_unchecked(&q, m);
            let w = (-beta * u - log_g).exp();
            (w, if w == 0.0 { 0.0 } else { w * u })
        } else {
            (0.0, 0.0)
        };
        ws.push(w);
        wus.push(wu);
    }
    let n = samples as f64;
    let z = stats::mean(&ws);
    let u = stats::mean(&wus);
    let z_se = (stats::variance(&ws) / n).sqrt();
    let u_se = (stats::variance(&wus) / n).sqrt();
    let cov = stats::covariance(&ws, &wus) / n;
    Ok((Moments { z, u, z_err: z_se, u_err: u_se }, cov))
}

/// Thermodynamics of the restricted Gibbs ensemble of macrostate `m`.
pub fn entropy(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m: &Macrostate,
    opts: &ThermoOptions,
) -> Result<ThermoReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::contract("beta must be positive"));
    }
    m.validate()?;
    m.check_dim(model.dim())?;
    let quad = model.dim() <= 2;
    let method = if quad { Method::Quadrature } else { Method::MonteCarlo };

    // Per (substate, Y) moments, weighted by w_Y.
    let mut z = 0.0;
    let mut zu = 0.0;
    let mut z_err = 0.0;
    let mut zu_err = 0.0;
    let mut z_var = 0.0;
    let mut zu_var = 0.0;
    let mut cov = 0.0;
    let mut per_boundary = Vec::new();
    for (yi, cfg) in ctx.configs().iter().enumerate() {
        let mut zy = 0.0;
        let mut zuy = 0.0;
        for (si, region) in m.substates.iter().enumerate() {
            let mom = if quad {
                quadrature_moments(model, &cfg.modifier, beta, region, opts.tolerance)
            } else {
                let stream = rng::substream(yi as u64, si as u64);
                monte_carlo_moments(model, &cfg.modifier, beta, region, opts.mc_samples, opts.seed, stream).map(
                    |(mom, c)| {
                        cov += cfg.weight * cfg.weight * c;
                        mom
                    },
                )
            }
            .map_err(|e| e.in_substate(&region.label))?;
            zy += mom.z;
            zuy += mom.u;
            let w = cfg.weight;
            if quad {
                z_err += w * mom.z_err;
                zu_err += w * mom.u_err;
            } else {
                z_var += w * w * mom.z_err * mom.z_err;
                zu_var += w * w * mom.u_err * mom.u_err;
            }
        }
        z += cfg.weight * zy;
        zu += cfg.weight * zuy;
        per_boundary.push(BoundaryBreakdown {
            label: cfg.label.clone(),
            weight: cfg.weight,
            z: zy,
            mean_u: if zy > 0.0 { zuy / zy } else { f64::NAN },
        });
    }
    if !(z > 0.0) {
        return Err(Error::EmptyRestriction(m.label.clone()));
    }
    let mean_u = zu / z;
    let ln_z = z.ln();
    let s = ln_z + beta * mean_u;

    let (entropy_direct, errors) = if quad {
        // Direct route: integrate -rho ln rho with rho = e^{-beta U} / Z.
        let qopts = QuadratureOptions { tolerance: opts.tolerance };
        let mut sd = 0.0;
        let mut sd_err = 0.0;
        for cfg in ctx.configs() {
            for region in &m.substates {
                let r = sampling::region_integral(model, &cfg.modifier, region, &qopts, |u| {
                    let rho = (-beta * u).exp() / z;
                    if rho == 0.0 {
                        0.0
                    } else {
                        -rho * rho.ln()
                    }
                })
                .map_err(|e| e.in_substate(&region.label))?;
                sd += cfg.weight * r.value;
                sd_err += cfg.weight * r.error;
            }
        }
        let mean_u_err = (zu_err + mean_u.abs() * z_err) / z;
        let errors = ThermoErrors { z: z_err, mean_u: mean_u_err, entropy: z_err / z + beta * mean_u_err + sd_err };
        (sd, errors)
    } else {
        // Delta method for the ratio estimator <U> = ZU / Z.
        let var_u = (zu_var - 2.0 * mean_u * cov + mean_u * mean_u * z_var) / (z * z);
        let se_u = var_u.max(0.0).sqrt();
        let se_lnz = z_var.sqrt() / z;
        let errors = ThermoErrors {
            z: stats::Z95 * z_var.sqrt(),
            mean_u: stats::Z95 * se_u,
            entropy: stats::Z95 * (se_lnz + beta * se_u),
        };
        // -E_rho[ln rho] with ln rho = -beta U - ln Z evaluated on the same
        // samples reduces to the same estimator.
        (s, errors)
    };

    Ok(ThermoReport {
        macrostate: m.label.clone(),
        beta,
        z,
        ln_z,
        entropy: s,
        entropy_direct,
        entropy_discrepancy: (s - entropy_direct).abs(),
        mean_u,
        per_boundary,
        method,
        errors,
        options: *opts,
    })
}

/// `Z(m) = sum_substates sum_Y w_Y Z_Y(substate)` with its error.
pub fn restricted_partition_function(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m: &Macrostate,
    opts: &ThermoOptions,
) -> Result<Estimate> {
    let r = entropy(model, ctx, beta, m, opts)?;
    Ok(match r.method {
        Method::Quadrature => {
            Estimate { value: r.z, stderr: r.errors.z, ci: stats::Interval::new(r.z - r.errors.z, r.z + r.errors.z) }
        }
        Method::MonteCarlo => Estimate::normal(r.z, r.errors.z / stats::Z95),
    })
}

/// A thermodynamic difference between two macrostates with an error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Difference {
    pub value: f64,
    pub error: f64,
}

/// `S(II) - S(I)`.
pub fn delta_s_int(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m_i: &Macrostate,
    m_ii: &Macrostate,
    opts: &ThermoOptions,
) -> Result<Difference> {
    let a = entropy(model, ctx, beta, m_i, opts)?;
    let b = entropy(model, ctx, beta, m_ii, opts)?;
    Ok(Difference { value: b.entropy - a.entropy, error: a.errors.entropy + b.errors.entropy })
}

/// `<U>_I - <U>_II`.
pub fn mean_heat_released(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    beta: f64,
    m_i: &Macrostate,
    m_ii: &Macrostate,
    opts: &ThermoOptions,
) -> Result<Difference> {
    let a = entropy(model, ctx, beta, m_i, opts)?;
    let b = entropy(model, ctx, beta, m_ii, opts)?;
    Ok(Difference { value: a.mean_u - b.mean_u, error: a.errors.mean_u + b.errors.mean_u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryConfig, FlatWell, HarmonicPiece, PotentialSpec};
    use std::f64::consts::PI;

    fn ctx() -> ConditioningContext {
        ConditioningContext::trivial()
    }

    fn flat(wells: &[(f64, f64, f64)]) -> HamiltonianModel {
        HamiltonianModel::bare(PotentialSpec::PiecewiseFlatBox {
            wells: wells.iter().map(|&(lo, hi, floor)| FlatWell { lo, hi, floor }).collect(),
        })
        .unwrap()
    }

    fn harmonic(k: f64) -> HamiltonianModel {
        HamiltonianModel::bare(PotentialSpec::Harmonic { k, q0: 0.0 }).unwrap()
    }

    /// Harmonic k=4 branch around -10 and k=1 branch around +10.
    pub(crate) fn harmonic_pair() -> HamiltonianModel {
        HamiltonianModel::bare(PotentialSpec::HarmonicPair {
            split: 0.0,
            left: HarmonicPiece { k: 4.0, q0: -10.0 },
            right: HarmonicPiece { k: 1.0, q0: 10.0 },
        })
        .unwrap()
    }

    fn everything() -> Macrostate {
        Macrostate::single(Region::everything("all"))
    }

    fn opts() -> ThermoOptions {
        ThermoOptions::default()
    }

    #[test]
    fn flat_boxes_add() {
        let m = flat(&[(0.0, 1.0, 0.0), (2.0, 4.0, 0.0)]);
        let ms =
            Macrostate::new("both", vec![Region::interval("a", 0.0, 1.0), Region::interval("b", 2.0, 4.0)]).unwrap();
        for beta in [0.1, 1.0, 7.0] {
            let z = restricted_partition_function(&m, &ctx(), beta, &ms, &opts()).unwrap();
            assert!((z.value - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_partition_function() {
        // sqrt(2 pi / (beta k)) at beta = 2, k = 1.
        let z = restricted_partition_function(&harmonic(1.0), &ctx(), 2.0, &everything(), &opts()).unwrap();
        assert!((z.value - PI.sqrt()).abs() < 1e-9);
        assert!((z.value - 1.772_454).abs() < 1e-6);
    }

    #[test]
    fn identical_boundary_configs_match_trivial() {
        let two = ConditioningContext::new(vec![
            BoundaryConfig { label: "a".into(), weight: 0.5, modifier: Modifier::None },
            BoundaryConfig { label: "b".into(), weight: 0.5, modifier: Modifier::None },
        ])
        .unwrap();
        let m = harmonic(1.0);
        let a = restricted_partition_function(&m, &two, 1.3, &everything(), &opts()).unwrap();
        let b = restricted_partition_function(&m, &ctx(), 1.3, &everything(), &opts()).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let m = flat(&[(0.0, 2.0, 0.0)]);
        let r = entropy(&m, &ctx(), 1.0, &everything(), &opts()).unwrap();
        assert!((r.entropy - 2f64.ln()).abs() < 1e-10);
        assert!((r.entropy_direct - std::f64::consts::LN_2).abs() < 1e-6);

        // Gaussian differential entropy: ln(2 pi e sigma^2) / 2 with sigma = 1.
        let r = entropy(&harmonic(1.0), &ctx(), 1.0, &everything(), &opts()).unwrap();
        let exact = 0.5 * (2.0 * PI * std::f64::consts::E).ln();
        assert!((r.entropy - exact).abs() < 1e-9);
        assert!((r.entropy_direct - exact).abs() < 1e-8);
        assert!((r.entropy - 1.418_939).abs() < 1e-6);
        assert!(r.entropy_discrepancy < 1e-8);
    }

    #[test]
    fn mixture_of_two_identical_wells_adds_ln_two() {
        let m = flat(&[(0.0, 1.5, 0.2), (3.0, 4.5, 0.2)]);
        let one = Macrostate::single(Region::interval("a", 0.0, 1.5));
        let two =
            Macrostate::new("ab", vec![Region::interval("a", 0.0, 1.5), Region::interval("b", 3.0, 4.5)]).unwrap();
        let s1 = entropy(&m, &ctx(), 1.0, &one, &opts()).unwrap();
        let s2 = entropy(&m, &ctx(), 1.0, &two, &opts()).unwrap();
        assert!((s2.z - 2.0 * s1.z).abs() < 1e-12);
        assert!((s2.entropy - (s1.entropy + 2f64.ln())).abs() < 1e-10);
        assert!((s2.entropy_direct - (s1.entropy_direct + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn delta_s_examples() {
        let m = flat(&[(-1.0, 0.0, 0.0), (0.0, 2.0, 0.0)]);
        let i = Macrostate::single(Region::interval("I", -1.0, 0.0));
        let ii = Macrostate::single(Region::interval("II", 0.0, 2.0));
        assert_eq!(delta_s_int(&m, &ctx(), 1.0, &i, &i, &opts()).unwrap().value, 0.0);
        let d = delta_s_int(&m, &ctx(), 1.0, &i, &ii, &opts()).unwrap();
        assert!((d.value - 2f64.ln()).abs() < 1e-10);

        // Gaussian entropy difference ln(k_I / k_II) / 2.
        let p = harmonic_pair();
        let i = Macrostate::single(Region::interval("I", f64::NEG_INFINITY, 0.0));
        let ii = Macrostate::single(Region::interval("II", 0.0, f64::INFINITY));
        let d = delta_s_int(&p, &ctx(), 1.0, &i, &ii, &opts()).unwrap();
        assert!((d.value - 0.5 * 4f64.ln()).abs() < 1e-9, "{}", d.value);
    }

    #[test]
    fn heat_examples() {
        let m = flat(&[(-1.0, 0.0, 1.0), (0.0, 2.0, 0.0)]);
        let i = Macrostate::single(Region::interval("I", -1.0, 0.0));
        let ii = Macrostate::single(Region::interval("II", 0.0, 2.0));
        assert_eq!(mean_heat_released(&m, &ctx(), 1.0, &i, &i, &opts()).unwrap().value, 0.0);
        let q = mean_heat_released(&m, &ctx(), 1.0, &i, &ii, &opts()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
        // Equipartition: <U> = 1 / (2 beta) whatever k.
        let p = harmonic_pair();
        let i = Macrostate::single(Region::interval("I", f64::NEG_INFINITY, 0.0));
        let ii = Macrostate::single(Region::interval("II", 0.0, f64::INFINITY));
        let q = mean_heat_released(&p, &ctx(), 1.0, &i, &ii, &opts()).unwrap();
        assert!(q.value.abs() < 1e-9, "{}", q.value);
    }

    #[test]
    fn substate_failure_is_named() {
        // Flat wells are bounded; a region in the wall gets Z = 0.
        let m = flat(&[(0.0, 1.0, 0.0)]);
        let wall = Macrostate::single(Region::interval("wall", 5.0, 6.0));
        assert!(matches!(entropy(&m, &ctx(), 1.0, &wall, &opts()), Err(Error::EmptyRestriction(_))));
        let mc = HamiltonianModel::new(
            1.0,
            PotentialSpec::Harmonic { k: 1.0, q0: 0.0 },
            vec![crate::model::BathMode { frequency: 1.0, coupling: 0.1 }; 2],
        )
        .unwrap();
        let err = entropy(&mc, &ctx(), 1.0, &everything(), &opts()).unwrap_err();
        assert!(matches!(err, Error::Substate { ref substate, .. } if substate == "all"), "{err}");
    }

    #[test]
    fn macrostate_rejects_overlap() {
        let r = Macrostate::new("bad", vec![Region::interval("a", 0.0, 2.0), Region::interval("b", 1.0, 3.0)]);
        assert!(r.is_err());
        let ok = Macrostate::new("ok", vec![Region::interval("a", 0.0, 1.0), Region::interval("b", 1.0, 3.0)]).unwrap();
        assert_eq!(ok.overlap_hits(2, 10_000, 10.0, 3), 0);
    }

    #[test]
    fn monte_carlo_path_matches_analytic_bath_factor() {
        // Three dims: the bath integrates to prod sqrt(2 pi / (beta w^2)).
        let modes = vec![
            crate::model::BathMode { frequency: 1.0, coupling: 0.3 },
            crate::model::BathMode { frequency: 2.0, coupling: -0.2 },
        ];
        let m = HamiltonianModel::new(1.0, PotentialSpec::Harmonic { k: 1.0, q0: 0.0 }, modes.clone()).unwrap();
        let beta = 1.5;
        let region = Macrostate::single(Region::interval("I", -1.0, 0.5));
        let r = entropy(&m, &ctx(), beta, &region, &ThermoOptions { mc_samples: 100_000, ..opts() }).unwrap();
        assert_eq!(r.method, Method::MonteCarlo);
        let bare = harmonic(1.0);
        let rq = entropy(&bare, &ctx(), beta, &region, &opts()).unwrap();
        let bath: f64 = modes.iter().map(|md| (2.0 * PI / (beta * md.frequency.powi(2))).sqrt()).product();
        let exact_z = rq.z * bath;
        assert!((r.z - exact_z).abs() < r.errors.z.max(1e-12) * 1.5, "{} vs {exact_z} +- {}", r.z, r.errors.z);
        // Each bath mode adds 1/(2 beta) to <U>.
        let exact_u = rq.mean_u + 2.0 * 0.5 / beta;
        assert!((r.mean_u - exact_u).abs() < r.errors.mean_u * 1.5, "{} vs {exact_u}", r.mean_u);
    }

    #[test]
    fn constant_offset_scales_z_only() {
        let shifted = ConditioningContext::new(vec![BoundaryConfig {
            label: "shifted".into(),
            weight: 1.0,
            modifier: Modifier::Offset { value: 0.7 },
        }])
        .unwrap();
        let beta = 1.3;
        let p = harmonic_pair();
        let i = Macrostate::single(Region::interval("I", -14.0, 0.0));
        let ii = Macrostate::single(Region::interval("II", 0.0, f64::INFINITY));
        for m in [&i, &ii] {
            let a = entropy(&p, &ctx(), beta, m, &opts()).unwrap();
            let b = entropy(&p, &shifted, beta, m, &opts()).unwrap();
            assert!((b.z / a.z - (-beta * 0.7f64).exp()).abs() < 1e-9);
            assert!((b.entropy - a.entropy).abs() < 1e-9);
        }
        let d0 = delta_s_int(&p, &ctx(), beta, &i, &ii, &opts()).unwrap().value;
        let d1 = delta_s_int(&p, &shifted, beta, &i, &ii, &opts()).unwrap().value;
        assert!((d0 - d1).abs() < 1e-9);
        let q0 = mean_heat_released(&p, &ctx(), beta, &i, &ii, &opts()).unwrap().value;
        let q1 = mean_heat_released(&p, &shifted, beta, &i, &ii, &opts()).unwrap().value;
        assert!((q0 - q1).abs() < 1e-9);
    }

    #[test]
    fn additivity_over_substates() {
        let m = HamiltonianModel::bare(PotentialSpec::AsymmetricDoubleWell { a: 0.25, b: 1.0, c: 0.2 }).unwrap();
        let parts = [
            Region::interval("a", f64::NEG_INFINITY, -0.5),
            Region::interval("b", -0.5, 0.3),
            Region::interval("c", 0.3, 2.0),
        ];
        let whole = Macrostate::new("abc", parts.to_vec()).unwrap();
        let total = restricted_partition_function(&m, &ctx(), 0.9, &whole, &opts()).unwrap().value;
        let sum: f64 = parts
            .iter()
            .map(|r| {
                restricted_partition_function(&m, &ctx(), 0.9, &Macrostate::single(r.clone()), &opts()).unwrap().value
            })
            .sum();
        assert!((total - sum).abs() < 1e-9);
    }

    #[test]
    fn membership_ignores_momenta() {
        use crate::model::{time_reverse, PhasePoint};
        use rand::Rng;
        let region = Region::new(
            "box",
            vec![Bound { coord: 0, lo: Some(-1.0), hi: Some(0.5) }, Bound { coord: 1, lo: None, hi: Some(0.2) }],
        )
        .unwrap();
        let mut rng = rng::stream(21, 0);
        for _ in 0..10_000 {
            let q: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = PhasePoint { q, p };
            assert_eq!(region.contains(&s.q), region.contains(&time_reverse(&s).q));
        }
    }
}
