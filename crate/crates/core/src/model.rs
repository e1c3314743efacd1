//! Deterministic model systems: a reaction coordinate in a one-dimensional
//! potential, bilinearly coupled to harmonic bath modes.
//!
//! Configuration vectors are laid out as `[q, x_1, ..., x_n]` where `q` is
//! the reaction coordinate and `x_i` the bath displacements. The bath
//! energy is `sum_i p_i^2/2 + w_i^2 (x_i - c_i q / w_i^2)^2 / 2`, so with all
//! couplings zero the reaction coordinate and each mode are independent.
//!
//! Reaction potentials may be piecewise: they expose sorted breakpoints on
//! the reaction axis and a per-piece formula. Integrators and quadrature
//! use the breakpoints; everything else just calls [`ReactionPotential::value`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::Dimension { expected: q.len().max(1), got: p.len() });
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::contract("phase point has non-finite coordinates"));
        }
        Ok(PhasePoint { q, p })
    }

    /// Phase point at rest at `q`.
    pub fn at_rest(q: Vec<f64>) -> Self {
        let p = vec![0.0; q.len()];
        PhasePoint { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Sup-norm distance over positions and momenta.
    pub fn distance_inf(&self, other: &PhasePoint) -> f64 {
        self.q.iter().zip(&other.q).chain(self.p.iter().zip(&other.p)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Momentum reversal `(q, p) -> (q, -p)`.
pub fn time_reverse(s: &PhasePoint) -> PhasePoint {
    PhasePoint { q: s.q.clone(), p: s.p.iter().map(|x| -x).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatWell {
    pub lo: f64,
    pub hi: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicPiece {
    pub k: f64,
    pub q0: f64,
}

/// Reaction-coordinate potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `k (q - q0)^2 / 2`
    Harmonic { k: f64, q0: f64 },
    /// `a q^4 - b q^2 + c q`
    AsymmetricDoubleWell { a: f64, b: f64, c: f64 },
    /// Constant floors on half-open wells `[lo, hi)`; infinite elsewhere.
    PiecewiseFlatBox { wells: Vec<FlatWell> },
    /// Two harmonic branches joined at `split` (left branch for `q < split`).
    HarmonicPair { split: f64, left: HarmonicPiece, right: HarmonicPiece },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            PotentialSpec::Harmonic { k, q0 } => {
                if !(finite(&[*k, *q0]) && *k > 0.0) {
                    return Err(Error::contract("harmonic potential needs finite k > 0"));
                }
            }
            PotentialSpec::AsymmetricDoubleWell { a, b, c } => {
                if !(finite(&[*a, *b, *c]) && *a > 0.0 && *b > 0.0) {
                    return Err(Error::contract("double well needs a > 0 and b > 0"));
                }
                // U'(q) = 4a q^3 - 2b q + c must change sign three times.
                let p = -b / (2.0 * a);
                let r = c / (4.0 * a);
                if 4.0 * p * p * p + 27.0 * r * r >= 0.0 {
                    return Err(Error::contract("double well has a single minimum for these coefficients"));
                }
            }
            PotentialSpec::PiecewiseFlatBox { wells } => {
                if wells.is_empty() {
                    return Err(Error::contract("flat box needs at least one well"));
                }
                for w in wells {
                    if !(finite(&[w.lo, w.hi, w.floor]) && w.lo < w.hi) {
                        return Err(Error::contract("flat well bounds must be finite with lo < hi"));
                    }
                }
                for (i, a) in wells.iter().enumerate() {
                    for b in &wells[i + 1..] {
                        if a.lo < b.hi && b.lo < a.hi {
                            return Err(Error::contract("flat wells overlap"));
                        }
                    }
                }
            }
            PotentialSpec::HarmonicPair { split, left, right } => {
                if !(finite(&[*split, left.k, left.q0, right.k, right.q0]) && left.k > 0.0 && right.k > 0.0) {
                    return Err(Error::contract("harmonic pair needs finite branches with k > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Validated reaction potential with its breakpoint structure resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionPotential {
    spec: PotentialSpec,
    breaks: Vec<f64>,
    piece_floor: Vec<f64>,
}

impl ReactionPotential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        spec.validate()?;
        let (breaks, piece_floor) = match &spec {
            PotentialSpec::PiecewiseFlatBox { wells } => {
                let mut breaks: Vec<f64> = wells.iter().flat_map(|w| [w.lo, w.hi]).collect();
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let floors = (0..=breaks.len())
                    .map(|i| {
                        if i == 0 || i == breaks.len() {
                            return f64::INFINITY;
                        }
                        let mid = 0.5 * (breaks[i - 1] + breaks[i]);
                        wells.iter().find(|w| w.lo <= mid && mid < w.hi).map_or(f64::INFINITY, |w| w.floor)
                    })
                    .collect();
                (breaks, floors)
            }
            PotentialSpec::HarmonicPair { split, .. } => (vec![*split], Vec::new()),
            _ => (Vec::new(), Vec::new()),
        };
        Ok(ReactionPotential { spec, breaks, piece_floor })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// Sorted positions where the potential may jump.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// Index of the piece containing `x`; pieces are half-open `[b_{i-1}, b_i)`.
    pub fn piece_of(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x)
    }

    pub fn piece_count(&self) -> usize {
        self.breaks.len() + 1
    }

    /// Potential evaluated with the formula of `piece` (also valid at the
    /// piece's closed boundary, which is what jump sizes need).
    pub fn value_in_piece(&self, piece: usize, x: f64) -> f64 {
        match &self.spec {
            PotentialSpec::Harmonic { k, q0 } => 0.5 * k * (x - q0) * (x - q0),
            PotentialSpec::AsymmetricDoubleWell { a, b, c } => {
                let x2 = x * x;
                a * x2 * x2 - b * x2 + c * x
            }
            PotentialSpec::PiecewiseFlatBox { .. } => self.piece_floor[piece],
            PotentialSpec::HarmonicPair { left, right, .. } => {
                let h = if piece == 0 { left } else { right };
                0.5 * h.k * (x - h.q0) * (x - h.q0)
            }
        }
    }

    pub fn gradient_in_piece(&self, piece: usize, x: f64) -> f64 {
        match &self.spec {
            PotentialSpec::Harmonic { k, q0 } => k * (x - q0),
            PotentialSpec::AsymmetricDoubleWell { a, b, c } => 4.0 * a * x * x * x - 2.0 * b * x + c,
            PotentialSpec::PiecewiseFlatBox { .. } => 0.0,
            PotentialSpec::HarmonicPair { left, right, .. } => {
                let h = if piece == 0 { left } else { right };
                h.k * (x - h.q0)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_in_piece(self.piece_of(x), x)
    }

    pub fn gradient(&self, x: f64) -> f64 {
        self.gradient_in_piece(self.piece_of(x), x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathMode {
    pub frequency: f64,
    pub coupling: f64,
}

/// Serializable description of a [`HamiltonianModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "unit")]
    pub reaction_mass: f64,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub bath: Vec<BathMode>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianModel {
    reaction_mass: f64,
    potential: ReactionPotential,
    bath: Vec<BathMode>,
}

impl HamiltonianModel {
    pub fn new(reaction_mass: f64, potential: PotentialSpec, bath: Vec<BathMode>) -> Result<Self> {
        if !(reaction_mass.is_finite() && reaction_mass > 0.0) {
            return Err(Error::contract("reaction mass must be positive"));
        }
        for m in &bath {
            if !(m.frequency.is_finite() && m.frequency > 0.0 && m.coupling.is_finite()) {
                return Err(Error::contract("bath frequencies must be positive and couplings finite"));
            }
        }
        Ok(HamiltonianModel { reaction_mass, potential: ReactionPotential::new(potential)?, bath })
    }

    /// Unit-mass reaction coordinate with no bath.
    pub fn bare(potential: PotentialSpec) -> Result<Self> {
        Self::new(1.0, potential, Vec::new())
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(spec.reaction_mass, spec.potential.clone(), spec.bath.clone())
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            reaction_mass: self.reaction_mass,
            potential: self.potential.spec().clone(),
            bath: self.bath.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.bath.len()
    }

    pub fn reaction_mass(&self) -> f64 {
        self.reaction_mass
    }

    pub fn reaction(&self) -> &ReactionPotential {
        &self.potential
    }

    pub fn bath(&self) -> &[BathMode] {
        &self.bath
    }

    /// Mass of configuration coordinate `i`.
    pub fn mass(&self, i: usize) -> f64 {
        if i == 0 {
            self.reaction_mass
        } else {
            1.0
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: n });
        }
        Ok(())
    }

    /// Bath energy at configuration `q` (zero with no modes).
    pub fn bath_potential(&self, q: &[f64]) -> f64 {
        self.bath
            .iter()
            .zip(&q[1..])
            .map(|(m, x)| {
                let w2 = m.frequency * m.frequency;
                let d = x - m.coupling * q[0] / w2;
                0.5 * w2 * d * d
            })
            .sum()
    }

    /// `U(X|Y)` without dimension checks, using piece `piece` for the
    /// reaction term.
    pub(crate) fn potential_in_piece(&self, piece: usize, q: &[f64], m: &Modifier) -> f64 {
        self.potential.value_in_piece(piece, q[0]) + self.bath_potential(q) + m.value(q)
    }

    pub(crate) fn potential_unchecked(&self, q: &[f64], m: &Modifier) -> f64 {
        self.potential_in_piece(self.potential.piece_of(q[0]), q, m)
    }

    /// Gradient of `U(X|Y)` into `out`, with the reaction term taken from `piece`.
    pub(crate) fn gradient_in_piece(&self, piece: usize, q: &[f64], m: &Modifier, out: &mut [f64]) {
        out[0] = self.potential.gradient_in_piece(piece, q[0]);
        for (i, (mode, x)) in self.bath.iter().zip(&q[1..]).enumerate() {
            let w2 = mode.frequency * mode.frequency;
            let d = x - mode.coupling * q[0] / w2;
            out[0] -= mode.coupling * d;
            out[i + 1] = w2 * d;
        }
        m.add_gradient(q, out);
    }

    pub fn kinetic_energy(&self, p: &[f64]) -> f64 {
        0.5 * p[0] * p[0] / self.reaction_mass + p[1..].iter().map(|x| 0.5 * x * x).sum::<f64>()
    }

    pub(crate) fn energy_unchecked(&self, s: &PhasePoint, m: &Modifier) -> f64 {
        self.kinetic_energy(&s.p) + self.potential_unchecked(&s.q, m)
    }

    /// Potential gradient at `q` for boundary configuration `y`.
    pub fn potential_gradient(&self, q: &[f64], ctx: &ConditioningContext, y: &str) -> Result<Vec<f64>> {
        self.check_dim(q.len())?;
        let m = ctx.modifier(y)?;
        let mut g = vec![0.0; q.len()];
        self.gradient_in_piece(self.potential.piece_of(q[0]), q, m, &mut g);
        Ok(g)
    }
}

/// `U(X|Y)` for configuration `q` under boundary configuration `y`.
pub fn potential_energy(model: &HamiltonianModel, q: &[f64], ctx: &ConditioningContext, y: &str) -> Result<f64> {
    model.check_dim(q.len())?;
    let m = ctx.modifier(y)?;
    Ok(model.potential_unchecked(q, m))
}

/// Kinetic plus potential energy.
pub fn total_energy(model: &HamiltonianModel, s: &PhasePoint, ctx: &ConditioningContext, y: &str) -> Result<f64> {
    model.check_dim(s.q.len())?;
    model.check_dim(s.p.len())?;
    let m = ctx.modifier(y)?;
    Ok(model.energy_unchecked(s, m))
}

/// Momentum-independent addition to the potential contributed by one
/// boundary configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modifier {
    #[default]
    None,
    Offset {
        value: f64,
    },
    Tilt {
        coord: usize,
        slope: f64,
    },
}

impl Modifier {
    pub fn value(&self, q: &[f64]) -> f64 {
        match self {
            Modifier::None => 0.0,
            Modifier::Offset { value } => *value,
            Modifier::Tilt { coord, slope } => slope * q[*coord],
        }
    }

    fn add_gradient(&self, _q: &[f64], out: &mut [f64]) {
        if let Modifier::Tilt { coord, slope } = self {
            out[*coord] += slope;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub label: String,
    pub weight: f64,
    #[serde(default)]
    pub modifier: Modifier,
}

/// Finite weighted set of boundary configurations `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BoundaryConfig>", into = "Vec<BoundaryConfig>")]
pub struct ConditioningContext {
    configs: Vec<BoundaryConfig>,
}

pub const DEFAULT_BOUNDARY: &str = "default";

impl ConditioningContext {
    pub fn new(configs: Vec<BoundaryConfig>) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::contract("conditioning context needs at least one configuration"));
        }
        if configs.iter().any(|c| !(c.weight >= 0.0 && c.weight.is_finite())) {
            return Err(Error::contract("boundary weights must be finite and nonnegative"));
        }
        let total: f64 = configs.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!("boundary weights sum to {total}, not 1")));
        }
        for (i, c) in configs.iter().enumerate() {
            if configs[..i].iter().any(|d| d.label == c.label) {
                return Err(Error::contract(format!("duplicate boundary label `{}`", c.label)));
            }
        }
        Ok(ConditioningContext { configs })
    }

    /// Single configuration `default` with weight one and no modifier.
    pub fn trivial() -> Self {
        ConditioningContext {
            configs: vec![BoundaryConfig {
                label: DEFAULT_BOUNDARY.to_string(),
                weight: 1.0,
                modifier: Modifier::None,
            }],
        }
    }

    pub fn configs(&self) -> &[BoundaryConfig] {
        &self.configs
    }

    pub fn modifier(&self, y: &str) -> Result<&Modifier> {
        self.configs
            .iter()
            .find(|c| c.label == y)
            .map(|c| &c.modifier)
            .ok_or_else(|| Error::UnknownBoundary(y.to_string()))
    }

    /// Label of the first configuration.
    pub fn first_label(&self) -> &str {
        &self.configs[0].label
    }
}

impl Default for ConditioningContext {
    fn default() -> Self {
        Self::trivial()
    }
}

impl TryFrom<Vec<BoundaryConfig>> for ConditioningContext {
    type Error = Error;

    fn try_from(v: Vec<BoundaryConfig>) -> Result<Self> {
        ConditioningContext::new(v)
    }
}

impl From<ConditioningContext> for Vec<BoundaryConfig> {
    fn from(c: ConditioningContext) -> Self {
        c.configs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dw() -> PotentialSpec {
        PotentialSpec::AsymmetricDoubleWell { a: 1.0, b: 2.0, c: 0.0 }
    }

    fn dw_bath() -> HamiltonianModel {
        HamiltonianModel::new(
            1.0,
            PotentialSpec::AsymmetricDoubleWell { a: 1.0, b: 2.0, c: 0.2 },
            vec![BathMode { frequency: 1.3, coupling: 0.4 }, BathMode { frequency: 0.7, coupling: -0.3 }],
        )
        .unwrap()
    }

    #[test]
    fn potential_examples() {
        let ctx = ConditioningContext::trivial();
        let h = HamiltonianModel::bare(PotentialSpec::Harmonic { k: 1.0, q0: 0.0 }).unwrap();
        assert_eq!(potential_energy(&h, &[2.0], &ctx, "default").unwrap(), 2.0);
        let d = HamiltonianModel::bare(dw()).unwrap();
        assert_eq!(potential_energy(&d, &[0.0], &ctx, "default").unwrap(), 0.0);
        // 1 - 2 by hand.
        assert_eq!(potential_energy(&d, &[1.0], &ctx, "default").unwrap(), -1.0);
    }

    #[test]
    fn potential_errors() {
        let ctx = ConditioningContext::trivial();
        let h = HamiltonianModel::bare(PotentialSpec::Harmonic { k: 1.0, q0: 0.0 }).unwrap();
        assert!(matches!(
            potential_energy(&h, &[1.0, 2.0], &ctx, "default"),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
        assert!(matches!(potential_energy(&h, &[1.0], &ctx, "nope"), Err(Error::UnknownBoundary(_))));
    }

    #[test]
    fn kinetic_examples() {
        let ctx = ConditioningContext::trivial();
        let h = HamiltonianModel::bare(PotentialSpec::Harmonic { k: 1.0, q0: 0.0 }).unwrap();
        let s = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(total_energy(&h, &s, &ctx, "default").unwrap(), 0.5);
        let m = dw_bath();
        let q = vec![0.3, -0.2, 1.1];
        let rest = PhasePoint::at_rest(q.clone());
        assert_eq!(
            total_energy(&m, &rest, &ctx, "default").unwrap(),
            potential_energy(&m, &q, &ctx, "default").unwrap()
        );
    }

    #[test]
    fn decoupled_energy_is_additive() {
        let ctx = ConditioningContext::trivial();
        let modes = vec![BathMode { frequency: 2.0, coupling: 0.0 }, BathMode { frequency: 0.5, coupling: 0.0 }];
        let m = HamiltonianModel::new(1.0, dw(), modes.clone()).unwrap();
        let s = PhasePoint::new(vec![0.7, 0.3, -1.2], vec![0.1, -0.4, 0.9]).unwrap();
        let total = total_energy(&m, &s, &ctx, "default").unwrap();
        let reaction = 0.5 * 0.1f64.powi(2) + (0.7f64.powi(4) - 2.0 * 0.7f64.powi(2));
        let osc: f64 = modes
            .iter()
            .enumerate()
            .map(|(i, md)| 0.5 * s.p[i + 1].powi(2) + 0.5 * md.frequency.powi(2) * s.q[i + 1].powi(2))
            .sum();
        assert!((total - (reaction + osc)).abs() < 1e-12);
    }

    #[test]
    fn time_reverse_examples() {
        let s = PhasePoint::new(vec![1.0, 2.0], vec![3.0, -4.0]).unwrap();
        let r = time_reverse(&s);
        assert_eq!(r.q, vec![1.0, 2.0]);
        assert_eq!(r.p, vec![-3.0, 4.0]);
        assert_eq!(time_reverse(&r), s);
        let rest = PhasePoint::at_rest(vec![0.5]);
        assert_eq!(time_reverse(&rest), rest);
        let m = dw_bath();
        let ctx = ConditioningContext::trivial();
        let s = PhasePoint::new(vec![0.4, 0.1, -0.3], vec![1.0, -2.0, 0.25]).unwrap();
        assert_eq!(
            total_energy(&m, &s, &ctx, "default").unwrap().to_bits(),
            total_energy(&m, &time_reverse(&s), &ctx, "default").unwrap().to_bits()
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = dw_bath();
        let ctx = ConditioningContext::new(vec![BoundaryConfig {
            label: "tilted".into(),
            weight: 1.0,
            modifier: Modifier::Tilt { coord: 0, slope: 0.3 },
        }])
        .unwrap();
        let h = 1e-5;
        for i in 0..10u64 {
            let u = |j: u64| ((crate::rng::substream(i, j) >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0;
            let q = vec![u(0), u(1), u(2)];
            let g = m.potential_gradient(&q, &ctx, "tilted").unwrap();
            for d in 0..3 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[d] += h;
                qm[d] -= h;
                let fd = (potential_energy(&m, &qp, &ctx, "tilted").unwrap()
                    - potential_energy(&m, &qm, &ctx, "tilted").unwrap())
                    / (2.0 * h);
                let rel = (fd - g[d]).abs() / g[d].abs().max(1.0);
                assert!(rel <= 1e-6, "coord {d}: fd {fd} vs {}", g[d]);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(PotentialSpec::Harmonic { k: 0.0, q0: 0.0 }.validate().is_err());
        assert!(PotentialSpec::AsymmetricDoubleWell { a: 1.0, b: 2.0, c: 5.0 }.validate().is_err());
        assert!(PotentialSpec::AsymmetricDoubleWell { a: 1.0, b: 2.0, c: 0.3 }.validate().is_ok());
        let overlap = PotentialSpec::PiecewiseFlatBox {
            wells: vec![FlatWell { lo: 0.0, hi: 2.0, floor: 0.0 }, FlatWell { lo: 1.0, hi: 3.0, floor: 0.0 }],
        };
        assert!(overlap.validate().is_err());
        assert!(ConditioningContext::new(vec![BoundaryConfig {
            label: "a".into(),
            weight: 0.5,
            modifier: Modifier::None,
        }])
        .is_err());
    }

    #[test]
    fn flat_box_pieces() {
        let r = ReactionPotential::new(PotentialSpec::PiecewiseFlatBox {
            wells: vec![
                FlatWell { lo: -2.0, hi: 0.0, floor: 1.0 },
                FlatWell { lo: 0.0, hi: 1.0, floor: 0.0 },
                FlatWell { lo: 3.0, hi: 4.0, floor: 2.0 },
            ],
        })
        .unwrap();
        assert_eq!(r.breakpoints(), &[-2.0, 0.0, 1.0, 3.0, 4.0]);
        assert_eq!(r.value(-3.0), f64::INFINITY);
        assert_eq!(r.value(-2.0), 1.0);
        assert_eq!(r.value(0.0), 0.0);
        assert_eq!(r.value(2.0), f64::INFINITY);
        assert_eq!(r.value(3.5), 2.0);
        assert_eq!(r.value(4.0), f64::INFINITY);
    }

    #[test]
    fn context_round_trips_through_toml() {
        let ctx = ConditioningContext::new(vec![
            BoundaryConfig { label: "a".into(), weight: 0.25, modifier: Modifier::Offset { value: 1.0 } },
            BoundaryConfig { label: "b".into(), weight: 0.75, modifier: Modifier::None },
        ])
        .unwrap();
        #[derive(Serialize, Deserialize)]
        struct W {
            ctx: ConditioningContext,
        }
        let text = toml::to_string(&W { ctx: ctx.clone() }).unwrap();
        let back: W = toml::from_str(&text).unwrap();
        assert_eq!(back.ctx, ctx);
    }
}
