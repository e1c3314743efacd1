//! Finite-dimensional quantum analogues: trace-formula transition
//! probabilities between projection-valued macrostates, their ratio
//! identity under time reversal, and restricted-Gibbs entropies.
//!
//! Time reversal is complex conjugation in the standard basis, so a
//! time-reversal symmetric Hamiltonian is a real symmetric matrix. All
//! matrix functions go through a full eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen, QR};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const MAX_DIM: usize = 512;

type CMatrix = DMatrix<Complex64>;
type RMatrix = DMatrix<f64>;

fn sup_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sup_norm_real(m: &RMatrix) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

/// Self-adjoint Hamiltonian with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct QuantumSystem {
    hamiltonian: CMatrix,
    tr_symmetric: bool,
    energies: DVector<f64>,
    vectors: CMatrix,
}

impl QuantumSystem {
    pub fn new(hamiltonian: CMatrix, tr_symmetric: bool) -> Result<Self> {
        let d = hamiltonian.nrows();
        if d == 0 || d != hamiltonian.ncols() {
            return Err(Error::contract("Hamiltonian must be a nonempty square matrix"));
        }
        if d > MAX_DIM {
            return Err(Error::contract(format!("dimension {d} exceeds the cap of {MAX_DIM}")));
        }
        if sup_norm(&(&hamiltonian - hamiltonian.adjoint())) > 1e-12 {
            return Err(Error::contract("Hamiltonian is not self-adjoint"));
        }
        if tr_symmetric && hamiltonian.iter().any(|z| z.im.abs() > 1e-14) {
            return Err(Error::contract("time-reversal symmetric Hamiltonian must be real"));
        }
        let eig = SymmetricEigen::new(hamiltonian.clone());
        Ok(QuantumSystem { hamiltonian, tr_symmetric, energies: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn real(h: &RMatrix) -> Result<Self> {
        Self::new(complexify(h), true)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn tr_symmetric(&self) -> bool {
        self.tr_symmetric
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `V diag(f(E)) V^dagger`
    fn function(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, e) in self.energies.iter().enumerate() {
            let c = f(*e);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= c;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i tau H)`
    pub fn propagator(&self, tau: f64) -> CMatrix {
        self.function(|e| Complex64::new(0.0, -tau * e).exp())
    }

    /// `exp(-beta H)`
    pub fn boltzmann(&self, beta: f64) -> CMatrix {
        self.function(|e| Complex64::new((-beta * e).exp(), 0.0))
    }

    pub fn commutator_norm(&self, p: &CMatrix) -> f64 {
        sup_norm(&(&self.hamiltonian * p - p * &self.hamiltonian))
    }
}

/// Two orthogonal real projections with their commutators with `H`.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub p_i: RMatrix,
    pub p_ii: RMatrix,
    /// `(|[H, P_I]|, |[H, P_II]|)` in the sup norm.
    pub commutation: (f64, f64),
}

impl ProjectionPair {
    pub fn new(sys: &QuantumSystem, p_i: RMatrix, p_ii: RMatrix) -> Result<Self> {
        let d = sys.dim();
        for (name, p) in [("P_I", &p_i), ("P_II", &p_ii)] {
            if p.nrows() != d || p.ncols() != d {
                return Err(Error::Dimension { expected: d, got: p.nrows() });
            }
            if sup_norm_real(&(p * p - p)) > 1e-12 || sup_norm_real(&(p - p.transpose())) > 1e-12 {
                return Err(Error::contract(format!("{name} is not an orthogonal projection")));
            }
        }
        if sup_norm_real(&(&p_i * &p_ii)) > 1e-12 {
            return Err(Error::contract("P_I and P_II are not orthogonal"));
        }
        let commutation = (sys.commutator_norm(&complexify(&p_i)), sys.commutator_norm(&complexify(&p_ii)));
        Ok(ProjectionPair { p_i, p_ii, commutation })
    }
}

/// Spectral projection onto eigenvalues in `[E - dE/2, E + dE/2]`.
#[derive(Debug, Clone)]
pub struct EnergyShellProjection {
    pub energy: f64,
    pub width: f64,
    pub matrix: CMatrix,
    pub rank: usize,
    /// Diagonal in the eigenbasis of the system it was built from.
    mask: Vec<f64>,
}

impl EnergyShellProjection {
    pub fn new(sys: &QuantumSystem, energy: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::contract("shell width must be positive"));
        }
        let mask: Vec<f64> =
            sys.energies.iter().map(|e| if (e - energy).abs() <= 0.5 * width { 1.0 } else { 0.0 }).collect();
        let rank = mask.iter().filter(|m| **m > 0.0).count();
        if rank == 0 {
            return Err(Error::contract(format!("no eigenvalue within the shell at {energy}")));
        }
        let matrix = sys.function(|e| Complex64::new(if (e - energy).abs() <= 0.5 * width { 1.0 } else { 0.0 }, 0.0));
        Ok(EnergyShellProjection { energy, width, matrix, rank, mask })
    }

    /// The whole spectrum.
    pub fn identity(sys: &QuantumSystem) -> Self {
        let lo = sys.energies.min();
        let hi = sys.energies.max();
        EnergyShellProjection {
            energy: 0.5 * (lo + hi),
            width: (hi - lo) + 1.0,
            matrix: CMatrix::identity(sys.dim(), sys.dim()),
            rank: sys.dim(),
            mask: vec![1.0; sys.dim()],
        }
    }
}

/// `pi(from -> to)` as a function of `tau`, precomputed in the eigenbasis
/// so that each evaluation is quadratic in the dimension.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    /// `V^dagger F S F V`
    a: CMatrix,
    /// `V^dagger T V`
    t: CMatrix,
    energies: DVector<f64>,
    denom: f64,
}

impl TransitionKernel {
    pub fn new(sys: &QuantumSystem, shell: &EnergyShellProjection, from: &RMatrix, to: &RMatrix) -> Result<Self> {
        if shell.mask.len() != sys.dim() || from.nrows() != sys.dim() || to.nrows() != sys.dim() {
            return Err(Error::contract("dimension mismatch"));
        }
        let v = &sys.vectors;
        let vh = v.adjoint();
        let f = &vh * complexify(from) * v;
        let t = &vh * complexify(to) * v;
        let denom: f64 = shell.mask.iter().enumerate().map(|(j, m)| m * f[(j, j)].re).sum();
        if !(denom > 1e-12) {
            return Err(Error::UndefinedRatio("Tr(shell * from) vanishes".into()));
        }
        let mut fs = f.clone();
        for (j, m) in shell.mask.iter().enumerate() {
            if *m == 0.0 {
                fs.column_mut(j).fill(Complex64::new(0.0, 0.0));
            }
        }
        Ok(TransitionKernel { a: fs * f, t, energies: sys.energies.clone(), denom })
    }

    pub fn at(&self, tau: f64) -> f64 {
        // Tr(A D^dagger T D) with D = diag(exp(-i tau E)).
        let d: Vec<Complex64> = self.energies.iter().map(|e| Complex64::new(0.0, -tau * e).exp()).collect();
        let n = d.len();
        let mut sum = 0.0;
        for j in 0..n {
            for k in 0..n {
                sum += (self.a[(j, k)] * d[k].conj() * self.t[(k, j)] * d[j]).re;
            }
        }
        sum / self.denom
    }
}

/// `Tr(S F e^{i tau H} T e^{-i tau H} F) / Tr(S F)` for shell `S`,
/// origin `F` and destination `T`.
pub fn transition_probability(
    sys: &QuantumSystem,
    shell: &EnergyShellProjection,
    from: &RMatrix,
    to: &RMatrix,
    tau: f64,
) -> Result<f64> {
    Ok(TransitionKernel::new(sys, shell, from, to)?.at(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioComparison {
    pub tau: f64,
    pub pi_forward: f64,
    pub pi_reverse: f64,
    /// `pi(II -> I) / pi(I -> II)`
    pub pi_ratio: f64,
    /// `Tr(S P_I) / Tr(S P_II)`
    pub trace_ratio: f64,
    pub violation: f64,
    pub passed: bool,
}

/// Forward and reverse kernels of a pair, with the trace ratio.
struct RatioKernels {
    fwd: TransitionKernel,
    rev: TransitionKernel,
    trace_ratio: f64,
}

impl RatioKernels {
    fn new(sys: &QuantumSystem, shell: &EnergyShellProjection, pair: &ProjectionPair) -> Result<Self> {
        let fwd = TransitionKernel::new(sys, shell, &pair.p_i, &pair.p_ii)?;
        let rev = TransitionKernel::new(sys, shell, &pair.p_ii, &pair.p_i)?;
        let trace_ratio = fwd.denom / rev.denom;
        Ok(RatioKernels { fwd, rev, trace_ratio })
    }

    fn compare(&self, tau: f64) -> Result<RatioComparison> {
        let fwd = self.fwd.at(tau);
        let rev = self.rev.at(tau);
        if !(fwd > 0.0) {
            return Err(Error::UndefinedRatio("forward transition probability vanishes".into()));
        }
        let pi_ratio = rev / fwd;
        let violation = (pi_ratio - self.trace_ratio).abs();
        Ok(RatioComparison {
            tau,
            pi_forward: fwd,
            pi_reverse: rev,
            pi_ratio,
            trace_ratio: self.trace_ratio,
            violation,
            passed: violation <= 1e-10,
        })
    }
}

fn compare_ratio(
    sys: &QuantumSystem,
    shell: &EnergyShellProjection,
    pair: &ProjectionPair,
    tau: f64,
) -> Result<RatioComparison> {
    RatioKernels::new(sys, shell, pair)?.compare(tau)
}

/// `pi(II->I) / pi(I->II)` against `Tr(S P_I) / Tr(S P_II)`; requires a
/// time-reversal symmetric system.
pub fn verify_quantum_ratio(
    sys: &QuantumSystem,
    shell: &EnergyShellProjection,
    pair: &ProjectionPair,
    tau: f64,
) -> Result<RatioComparison> {
    if !sys.tr_symmetric() {
        return Err(Error::Precondition("ratio identity needs a time-reversal symmetric Hamiltonian".into()));
    }
    compare_ratio(sys, shell, pair, tau)
}

/// Same comparison without the symmetry precondition (negative controls).
pub fn ratio_violation(
    sys: &QuantumSystem,
    shell: &EnergyShellProjection,
    pair: &ProjectionPair,
    tau: f64,
) -> Result<RatioComparison> {
    compare_ratio(sys, shell, pair, tau)
}

/// `Tr(e^{-beta H} P_I) / Tr(e^{-beta H} P_II)`
pub fn canonical_ratio(sys: &QuantumSystem, beta: f64, pair: &ProjectionPair) -> Result<f64> {
    let g = sys.boltzmann(beta);
    let a = trace_re(&(&g * complexify(&pair.p_i)));
    let b = trace_re(&(&g * complexify(&pair.p_ii)));
    if !(b > 0.0) {
        return Err(Error::UndefinedRatio("Tr(exp(-beta H) P_II) vanishes".into()));
    }
    Ok(a / b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedState {
    /// `-Tr rho ln rho`
    pub entropy: f64,
    pub ln_z: f64,
    /// `Tr(rho H)`
    pub mean_energy: f64,
    pub rank: usize,
    /// `|S - ln Z - beta Tr(rho H)|`
    pub consistency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumEntropyReport {
    pub beta: f64,
    pub state_i: RestrictedState,
    pub state_ii: RestrictedState,
    /// `ln Tr(e^{-beta H} P_I) - ln Tr(e^{-beta H} P_II)`
    pub lhs: f64,
    /// `S_I - S_II - beta (Tr rho_I H - Tr rho_II H)`
    pub rhs: f64,
    pub discrepancy: f64,
    pub passed: bool,
}

fn restricted_state(sys: &QuantumSystem, beta: f64, p: &RMatrix) -> Result<RestrictedState> {
    // rho = e^{-beta H/2} P e^{-beta H/2} / Z equals e^{-beta H} P / Z when
    // P commutes with H, and is Hermitian by construction.
    let half = sys.boltzmann(0.5 * beta);
    let unnorm = &half * complexify(p) * &half;
    let z = trace_re(&unnorm);
    if !(z > 0.0) {
        return Err(Error::contract("restricted trace vanishes"));
    }
    let rho = unnorm / Complex64::new(z, 0.0);
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let mu = SymmetricEigen::new(rho.clone()).eigenvalues;
    let entropy: f64 = mu.iter().filter(|m| **m > 0.0).map(|m| -m * m.ln()).sum();
    let mean_energy = trace_re(&(&rho * sys.hamiltonian()));
    let ln_z = z.ln();
    let rank = p.trace().round() as usize;
    Ok(RestrictedState { entropy, ln_z, mean_energy, rank, consistency: (entropy - ln_z - beta * mean_energy).abs() })
}

/// Checks `ln(Tr e^{-beta H} P_I / Tr e^{-beta H} P_II) =
/// S_I - S_II - beta (Tr rho_I H - Tr rho_II H)` for projections that
/// commute with `H`.
pub fn verify_quantum_entropy_identity(
    sys: &QuantumSystem,
    beta: f64,
    pair: &ProjectionPair,
) -> Result<QuantumEntropyReport> {
    for (name, c) in [("P_I", pair.commutation.0), ("P_II", pair.commutation.1)] {
        if c > 1e-10 {
            return Err(Error::Precondition(format!("{name} does not commute with H (|[H, P]| = {c:e})")));
        }
    }
    let a = restricted_state(sys, beta, &pair.p_i)?;
    let b = restricted_state(sys, beta, &pair.p_ii)?;
    let lhs = canonical_ratio(sys, beta, pair)?.ln();
    let rhs = a.entropy - b.entropy - beta * (a.mean_energy - b.mean_energy);
    let discrepancy = (lhs - rhs).abs();
    Ok(QuantumEntropyReport {
        beta,
        state_i: a,
        state_ii: b,
        lhs,
        rhs,
        discrepancy,
        passed: discrepancy <= 1e-10 && a.consistency <= 1e-10 && b.consistency <= 1e-10,
    })
}

/// Random ensemble for instance generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// Real symmetric Gaussian matrix (time-reversal symmetric).
    Goe,
    /// Real Gaussian magnitudes with random phases (symmetry broken).
    Phased,
}

pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> RMatrix {
    let a = RMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    QR::new(a).q()
}

pub fn random_hamiltonian(d: usize, spectrum: Spectrum, rng: &mut impl Rng) -> CMatrix {
    let a = RMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sym = (&a + a.transpose()) * (0.5 / (d as f64).sqrt());
    match spectrum {
        Spectrum::Goe => complexify(&sym),
        Spectrum::Phased => {
            let mut h = complexify(&sym);
            for i in 0..d {
                for j in i + 1..d {
                    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                    h[(i, j)] *= phase;
                    h[(j, i)] = h[(i, j)].conj();
                }
            }
            h
        }
    }
}

/// Projections onto disjoint sets of columns of an orthogonal matrix.
fn column_projections(q: &RMatrix, cols_i: &[usize], cols_ii: &[usize]) -> (RMatrix, RMatrix) {
    let proj = |cols: &[usize]| {
        let mut m = RMatrix::zeros(q.nrows(), q.nrows());
        for &c in cols {
            let v = q.column(c);
            m += &v * v.transpose();
        }
        m
    };
    (proj(cols_i), proj(cols_ii))
}

/// Random real projections of the given ranks onto orthogonal subspaces.
pub fn random_projection_pair(
    d: usize,
    rank_i: usize,
    rank_ii: usize,
    rng: &mut impl Rng,
) -> Result<(RMatrix, RMatrix)> {
    if rank_i == 0 || rank_ii == 0 || rank_i + rank_ii > d {
        return Err(Error::contract("projection ranks must be positive and fit in the dimension"));
    }
    let q = random_orthogonal(d, rng);
    let a: Vec<usize> = (0..rank_i).collect();
    let b: Vec<usize> = (rank_i..rank_i + rank_ii).collect();
    Ok(column_projections(&q, &a, &b))
}

/// Description of one randomized instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub dimension: usize,
    pub spectrum: Spectrum,
    pub rank_i: usize,
    pub rank_ii: usize,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

pub struct Instance {
    pub system: QuantumSystem,
    pub pair: ProjectionPair,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        let mut rng = rng::stream(self.seed, self.stream);
        let h = random_hamiltonian(self.dimension, self.spectrum, &mut rng);
        let system = QuantumSystem::new(h, self.spectrum == Spectrum::Goe)?;
        let (a, b) = random_projection_pair(self.dimension, self.rank_i, self.rank_ii, &mut rng)?;
        let pair = ProjectionPair::new(&system, a, b)?;
        Ok(Instance { system, pair })
    }
}

/// A random instance with `H = O diag(E) O^T` and projections onto
/// disjoint random subsets of its eigenvectors, so both commute with `H`.
pub fn commuting_instance(d: usize, seed: u64, stream: u64) -> Result<Instance> {
    let mut rng = rng::stream(seed, stream);
    let o = random_orthogonal(d, &mut rng);
    let e = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
    let h = &o * RMatrix::from_diagonal(&e) * o.transpose();
    let h = (&h + h.transpose()) * 0.5;
    let system = QuantumSystem::real(&h)?;
    let mut idx: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    let ra = rng.random_range(1..d);
    let rb = rng.random_range(1..=d - ra);
    let (pa, pb) = column_projections(&o, &idx[..ra], &idx[ra..ra + rb]);
    let pair = ProjectionPair::new(&system, pa, pb)?;
    Ok(Instance { system, pair })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub dimension: usize,
    pub rank_i: usize,
    pub rank_ii: usize,
    pub spectrum: Spectrum,
    /// Largest violation over the tau schedule.
    pub max_violation: f64,
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub instances: Vec<InstanceOutcome>,
    /// Symmetric: every violation <= 1e-10. Broken: every violation > 1e-3.
    pub passed: bool,
    pub worst: f64,
}

fn instance_dims(i: usize, seed: u64, d_min: usize, d_max: usize) -> (usize, usize, usize) {
    let mut rng = rng::stream(seed, rng::substream(7, i as u64));
    let d = rng.random_range(d_min..=d_max);
    let ra = rng.random_range(1..=(d / 3).max(1));
    let rb = rng.random_range(1..=(d - ra).min(2 * d / 3).max(1));
    (d, ra, rb)
}

/// `n` random instances with `shell = identity`, each checked at
/// `taus_per_instance` random times in `(0.5, 5)`. For the symmetric
/// ensemble the largest violation must stay below 1e-10; for the broken
/// ensemble it must exceed 1e-3.
pub fn random_ratio_batch(
    spectrum: Spectrum,
    n: usize,
    d_min: usize,
    d_max: usize,
    taus_per_instance: usize,
    seed: u64,
) -> Result<BatchOutcome> {
    if d_min < 2 || d_max < d_min || d_max > MAX_DIM || taus_per_instance == 0 {
        return Err(Error::contract("bad batch dimensions"));
    }
    let instances: Vec<InstanceOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (d, ra, rb) = instance_dims(i, seed, d_min, d_max);
            let spec = InstanceSpec { dimension: d, spectrum, rank_i: ra, rank_ii: rb, seed, stream: i as u64 };
            let inst = spec.build()?;
            let shell = EnergyShellProjection::identity(&inst.system);
            let mut rng = rng::stream(seed, rng::substream(i as u64, 1));
            let taus: Vec<f64> = (0..taus_per_instance).map(|_| rng.random_range(0.5..5.0)).collect();
            let kernels = RatioKernels::new(&inst.system, &shell, &inst.pair)?;
            let mut worst: f64 = 0.0;
            for &tau in &taus {
                worst = worst.max(kernels.compare(tau)?.violation);
            }
            Ok(InstanceOutcome { dimension: d, rank_i: ra, rank_ii: rb, spectrum, max_violation: worst, taus })
        })
        .collect::<Result<_>>()?;
    let (passed, worst) = match spectrum {
        Spectrum::Goe => {
            let w = instances.iter().map(|o| o.max_violation).fold(0.0, f64::max);
            (w <= 1e-10, w)
        }
        Spectrum::Phased => {
            let w = instances.iter().map(|o| o.max_violation).fold(f64::INFINITY, f64::min);
            (w > 1e-3, w)
        }
    };
    Ok(BatchOutcome { instances, passed, worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBatchOutcome {
    pub discrepancies: Vec<f64>,
    pub worst: f64,
    pub passed: bool,
}

/// Entropy identity on `n` random commuting instances.
pub fn random_entropy_batch(n: usize, d_min: usize, d_max: usize, beta: f64, seed: u64) -> Result<EntropyBatchOutcome> {
    let discrepancies: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, rng::substream(11, i as u64));
            let d = rng.random_range(d_min.max(2)..=d_max);
            let inst = commuting_instance(d, seed, rng::substream(12, i as u64))?;
            let r = verify_quantum_entropy_identity(&inst.system, beta, &inst.pair)?;
            Ok(r.discrepancy.max(r.state_i.consistency).max(r.state_ii.consistency))
        })
        .collect::<Result<_>>()?;
    let worst = discrepancies.iter().copied().fold(0.0, f64::max);
    Ok(EntropyBatchOutcome { passed: worst <= 1e-10, worst, discrepancies })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_projection(d: usize, idx: &[usize]) -> RMatrix {
        let mut m = RMatrix::zeros(d, d);
        for &i in idx {
            m[(i, i)] = 1.0;
        }
        m
    }

    fn pauli_x() -> QuantumSystem {
        QuantumSystem::real(&RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    /// Matrix exponential by scaling and squaring of a Taylor series,
    /// independent of the eigendecomposition.
    fn expm(a: &CMatrix) -> CMatrix {
        let norm = a.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
        let s = norm.log2().ceil().max(0.0) as i32 + 4;
        let scaled = a / Complex64::new(2f64.powi(s), 0.0);
        let d = a.nrows();
        let mut term = CMatrix::identity(d, d);
        let mut sum = CMatrix::identity(d, d);
        for k in 1..30 {
            term = &term * &scaled / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn two_level_closed_form() {
        let sys = pauli_x();
        let shell = EnergyShellProjection::identity(&sys);
        let a = basis_projection(2, &[0]);
        let b = basis_projection(2, &[1]);
        for tau in [0.0, 0.3, 1.0, 2.5] {
            let p = transition_probability(&sys, &shell, &a, &b, tau).unwrap();
            assert!((p - tau.sin().powi(2)).abs() < 1e-12, "{tau}: {p}");
        }
        assert!((transition_probability(&sys, &shell, &a, &a, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(transition_probability(&sys, &shell, &a, &b, 0.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn propagator_matches_series_and_is_unitary() {
        let mut rng = rng::stream(1, 0);
        let h = random_hamiltonian(6, Spectrum::Phased, &mut rng);
        let sys = QuantumSystem::new(h.clone(), false).unwrap();
        let tau = 1.7;
        let u = sys.propagator(tau);
        let reference = expm(&(h * Complex64::new(0.0, -tau)));
        assert!(sup_norm(&(&u - reference)) < 1e-10);
        assert!(sup_norm(&(&u * u.adjoint() - CMatrix::identity(6, 6))) < 1e-10);
    }

    #[test]
    fn brute_force_trace_formula_on_small_instance() {
        let mut rng = rng::stream(2, 0);
        let h = random_hamiltonian(6, Spectrum::Goe, &mut rng);
        let sys = QuantumSystem::new(h.clone(), true).unwrap();
        let (a, b) = random_projection_pair(6, 2, 3, &mut rng).unwrap();
        let tau = 0.9;
        let u = expm(&(h * Complex64::new(0.0, -tau)));
        // Sum over an orthonormal basis of range(a) of <v| U^dagger B U |v>.
        let eig = SymmetricEigen::new(a.clone());
        let mut total = 0.0;
        for (j, val) in eig.eigenvalues.iter().enumerate() {
            if *val > 0.5 {
                let v = eig.eigenvectors.column(j).map(|x| Complex64::new(x, 0.0));
                let w = &u * &v;
                total += (w.adjoint() * complexify(&b) * &w)[(0, 0)].re;
            }
        }
        let shell = EnergyShellProjection::identity(&sys);
        let p = transition_probability(&sys, &shell, &a, &b, tau).unwrap();
        assert!((p - total / 2.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_identity_examples() {
        let mut rng = rng::stream(3, 0);
        let sys = QuantumSystem::new(random_hamiltonian(64, Spectrum::Goe, &mut rng), true).unwrap();
        let (a, b) = random_projection_pair(64, 10, 30, &mut rng).unwrap();
        let pair = ProjectionPair::new(&sys, a.clone(), b).unwrap();
        let shell = EnergyShellProjection::identity(&sys);
        let r = verify_quantum_ratio(&sys, &shell, &pair, 1.3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.trace_ratio - 10.0 / 30.0).abs() < 1e-12);
        assert!((r.pi_ratio - 10.0 / 30.0).abs() < 1e-10);

        let broken = QuantumSystem::new(random_hamiltonian(64, Spectrum::Phased, &mut rng), false).unwrap();
        let pair_b = ProjectionPair::new(&broken, pair.p_i.clone(), pair.p_ii.clone()).unwrap();
        let shell_b = EnergyShellProjection::identity(&broken);
        assert!(matches!(verify_quantum_ratio(&broken, &shell_b, &pair_b, 1.3), Err(Error::Precondition(_))));
        let worst = [0.7, 1.3, 2.9, 4.1]
            .iter()
            .map(|&t| ratio_violation(&broken, &shell_b, &pair_b, t).unwrap().violation)
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "{worst}");
    }

    #[test]
    fn same_projection_gives_unit_ratio() {
        // P_I == P_II is not an orthogonal pair, so compare directly.
        let sys = pauli_x();
        let shell = EnergyShellProjection::identity(&sys);
        let a = basis_projection(2, &[0]);
        let f = transition_probability(&sys, &shell, &a, &a, 0.4).unwrap();
        assert!((f / f - 1.0).abs() < 1e-15);
        let g = sys.boltzmann(0.8);
        let t = trace_re(&(&g * complexify(&a)));
        assert!((t / t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shell_projection_commutes() {
        let mut rng = rng::stream(4, 0);
        let sys = QuantumSystem::new(random_hamiltonian(20, Spectrum::Goe, &mut rng), true).unwrap();
        let shell = EnergyShellProjection::new(&sys, 0.0, 0.8).unwrap();
        assert!(shell.rank >= 1);
        assert!(sys.commutator_norm(&shell.matrix) < 1e-10);
        assert!(EnergyShellProjection::new(&sys, 100.0, 0.1).is_err());
    }

    #[test]
    fn probabilities_over_complete_family_sum_to_one() {
        let mut rng = rng::stream(5, 0);
        let d = 12;
        let sys = QuantumSystem::new(random_hamiltonian(d, Spectrum::Phased, &mut rng), false).unwrap();
        let shell = EnergyShellProjection::identity(&sys);
        let q = random_orthogonal(d, &mut rng);
        let family: Vec<RMatrix> =
            (0..4).map(|k| column_projections(&q, &(3 * k..3 * k + 3).collect::<Vec<_>>(), &[]).0).collect();
        let total: f64 = family.iter().map(|t| transition_probability(&sys, &shell, &family[0], t, 2.2).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn canonical_ratio_examples() {
        let sys = QuantumSystem::real(&RMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).unwrap();
        let pair = ProjectionPair::new(&sys, basis_projection(2, &[0]), basis_projection(2, &[1])).unwrap();
        assert!((canonical_ratio(&sys, 1.0, &pair).unwrap() - std::f64::consts::E).abs() < 1e-12);

        let mut rng = rng::stream(6, 0);
        let sys = QuantumSystem::new(random_hamiltonian(10, Spectrum::Goe, &mut rng), true).unwrap();
        let (a, b) = random_projection_pair(10, 3, 5, &mut rng).unwrap();
        let pair = ProjectionPair::new(&sys, a, b).unwrap();
        assert!((canonical_ratio(&sys, 0.0, &pair).unwrap() - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_identity_examples() {
        let sys = QuantumSystem::real(&RMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).unwrap();
        let pair = ProjectionPair::new(&sys, basis_projection(2, &[0]), basis_projection(2, &[1])).unwrap();
        let r = verify_quantum_entropy_identity(&sys, 1.0, &pair).unwrap();
        assert!(r.state_i.entropy.abs() < 1e-12 && r.state_ii.entropy.abs() < 1e-12);
        assert!((r.lhs - 1.0).abs() < 1e-12);
        assert!((r.rhs - 1.0).abs() < 1e-12);
        assert!(r.passed);

        // d = 4 by hand: P_I on energies {0, 1}, P_II on {2}.
        let e = [0.0, 1.0, 2.0, 3.0];
        let sys = QuantumSystem::real(&RMatrix::from_diagonal(&DVector::from_vec(e.to_vec()))).unwrap();
        let pair = ProjectionPair::new(&sys, basis_projection(4, &[0, 1]), basis_projection(4, &[2])).unwrap();
        let beta = 0.7;
        let r = verify_quantum_entropy_identity(&sys, beta, &pair).unwrap();
        let z: f64 = 1.0 + (-beta).exp();
        let p1 = (-beta).exp() / z;
        let s_hand = -(1.0 - p1) * (1.0 - p1).ln() - p1 * p1.ln();
        assert!((r.state_i.entropy - s_hand).abs() < 1e-12);
        assert!((r.state_i.mean_energy - p1).abs() < 1e-12);
        assert!((r.lhs - (z.ln() + beta * 2.0)).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn non_commuting_projection_is_named() {
        let mut rng = rng::stream(7, 0);
        let sys = QuantumSystem::new(random_hamiltonian(8, Spectrum::Goe, &mut rng), true).unwrap();
        let (a, b) = random_projection_pair(8, 2, 3, &mut rng).unwrap();
        let pair = ProjectionPair::new(&sys, a, b).unwrap();
        let err = verify_quantum_entropy_identity(&sys, 1.0, &pair).unwrap_err();
        assert!(err.to_string().contains("P_I"), "{err}");
    }

    #[test]
    fn random_diagonal_entropy_identity() {
        let out = random_entropy_batch(8, 16, 16, 0.7, 3).unwrap();
        assert!(out.passed, "{}", out.worst);
        for i in 0..8 {
            let inst = commuting_instance(16, 3, 100 + i).unwrap();
            let r = verify_quantum_entropy_identity(&inst.system, 0.7, &inst.pair).unwrap();
            for s in [r.state_i, r.state_ii] {
                assert!(s.entropy >= -1e-10 && s.entropy <= (s.rank as f64).ln() + 1e-10);
            }
        }
    }

    #[test]
    fn validation() {
        let bad = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
        );
        assert!(QuantumSystem::new(bad, false).is_err());
        let complex = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 0.0)],
        );
        assert!(QuantumSystem::new(complex.clone(), true).is_err());
        assert!(QuantumSystem::new(complex, false).is_ok());
        let sys = pauli_x();
        let overlap = ProjectionPair::new(&sys, basis_projection(2, &[0]), basis_projection(2, &[0]));
        assert!(overlap.is_err());
        let zero = RMatrix::zeros(2, 2);
        let shell = EnergyShellProjection::identity(&sys);
        assert!(transition_probability(&sys, &shell, &zero, &zero, 1.0).is_err());
    }

    #[test]
    fn small_batches() {
        let ok = random_ratio_batch(Spectrum::Goe, 6, 8, 24, 3, 1).unwrap();
        assert!(ok.passed, "{}", ok.worst);
        let broken = random_ratio_batch(Spectrum::Phased, 6, 8, 24, 8, 1).unwrap();
        assert!(broken.passed, "{}", broken.worst);
    }
}
