//! Fixed-step velocity-Verlet (kick–drift–kick) integration of the model
//! Hamiltonians.
//!
//! Jumps in a piecewise reaction potential are handled exactly inside the
//! drift: the reaction coordinate moves ballistically to the breakpoint,
//! then either crosses with its momentum rescaled by energy conservation or
//! reflects. Both outcomes are volume preserving and time-reversal
//! symmetric, so the discrete map keeps the two properties the
//! detailed-balance estimators rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{time_reverse, ConditioningContext, HamiltonianModel, Modifier, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt: f64,
    /// A run is flagged invalid when `max |H(t) - H(0)|` exceeds
    /// `drift_threshold * max(|H(0)|, 1)`.
    #[serde(default = "default_drift_threshold")]
    pub drift_threshold: f64,
}

fn default_drift_threshold() -> f64 {
    1e-4
}

impl IntegratorSpec {
    pub fn new(dt: f64) -> Result<Self> {
        let spec = IntegratorSpec { dt, drift_threshold: default_drift_threshold() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::contract("integrator step must be positive"));
        }
        if !(self.drift_threshold > 0.0) {
            return Err(Error::contract("drift threshold must be positive"));
        }
        Ok(())
    }

    /// Number of steps for duration `tau` (nearest multiple of `dt`) and the
    /// snap `steps * dt - tau`.
    pub fn snap(&self, tau: f64) -> (usize, f64) {
        let steps = (tau / self.dt).round().max(0.0) as usize;
        (steps, steps as f64 * self.dt - tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: PhasePoint,
    #[serde(rename = "final")]
    pub final_point: PhasePoint,
    /// Integrated duration `steps * dt`.
    pub duration: f64,
    pub requested_duration: f64,
    pub snap: f64,
    pub steps: usize,
    pub initial_energy: f64,
    pub energy_drift: f64,
    /// Drift above the integrator's threshold.
    pub invalid: bool,
}

/// Discrete flow for one model and boundary configuration.
pub(crate) struct Flow<'a> {
    model: &'a HamiltonianModel,
    modifier: &'a Modifier,
    dt: f64,
}

/// Mutable integration state; `piece` tracks which reaction piece the
/// particle is in so that boundary points are attributed consistently.
pub(crate) struct State {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    piece: usize,
    force: Vec<f64>,
}

impl<'a> Flow<'a> {
    pub fn new(model: &'a HamiltonianModel, modifier: &'a Modifier, dt: f64) -> Self {
        Flow { model, modifier, dt }
    }

    pub fn start(&self, s: &PhasePoint) -> State {
        let piece = self.model.reaction().piece_of(s.q[0]);
        let mut force = vec![0.0; s.q.len()];
        self.model.gradient_in_piece(piece, &s.q, self.modifier, &mut force);
        State { q: s.q.clone(), p: s.p.clone(), piece, force }
    }

    pub fn energy(&self, st: &State) -> f64 {
        self.model.kinetic_energy(&st.p) + self.model.potential_in_piece(st.piece, &st.q, self.modifier)
    }

    pub fn step(&self, st: &mut State) {
        let half = 0.5 * self.dt;
        for (p, f) in st.p.iter_mut().zip(&st.force) {
            *p -= half * f;
        }
        for i in 1..st.q.len() {
            st.q[i] += self.dt * st.p[i];
        }
        self.drift_reaction(st);
        self.model.gradient_in_piece(st.piece, &st.q, self.modifier, &mut st.force);
        for (p, f) in st.p.iter_mut().zip(&st.force) {
            *p -= half * f;
        }
    }

    fn drift_reaction(&self, st: &mut State) {
        let reaction = self.model.reaction();
        let breaks = reaction.breakpoints();
        let mass = self.model.reaction_mass();
        let mut x = st.q[0];
        let mut p = st.p[0];
        let mut piece = st.piece;
        let mut t_rem = self.dt;
        if breaks.is_empty() {
            st.q[0] = x + t_rem * p / mass;
            return;
        }
        loop {
            let v = p / mass;
            let x_end = x + v * t_rem;
            let hit = if v > 0.0 && piece < breaks.len() && x_end >= breaks[piece] {
                Some((breaks[piece], piece + 1))
            } else if v < 0.0 && piece > 0 && x_end < breaks[piece - 1] {
                Some((breaks[piece - 1], piece - 1))
            } else {
                None
            };
            let Some((b, next)) = hit else {
                x = x_end;
                break;
            };
            let t_hit = ((b - x) / v).clamp(0.0, t_rem);
            let jump = reaction.value_in_piece(next, b) - reaction.value_in_piece(piece, b);
            let kinetic = 0.5 * p * p / mass;
            if kinetic > jump {
                p = p.signum() * (p * p - 2.0 * mass * jump).sqrt();
                piece = next;
            } else {
                p = -p;
            }
            x = b;
            t_rem -= t_hit;
            if t_rem <= 0.0 {
                break;
            }
        }
        // Keep the coordinate inside the tracked half-open piece.
        if piece < breaks.len() && x >= breaks[piece] {
            x = breaks[piece].next_down();
        }
        if piece > 0 && x < breaks[piece - 1] {
            x = breaks[piece - 1];
        }
        st.q[0] = x;
        st.p[0] = p;
        st.piece = piece;
    }

    /// Run `steps` steps, returning the final state and `max |H(t) - H(0)|`.
    /// `observe(step, state, energy)` is called at step 0 and after every step.
    pub fn run(
        &self,
        s: &PhasePoint,
        steps: usize,
        mut observe: impl FnMut(usize, &State, f64),
    ) -> Result<(PhasePoint, f64, f64)> {
        let mut st = self.start(s);
        let h0 = self.energy(&st);
        if !h0.is_finite() {
            return Err(Error::BlowUp { step: 0 });
        }
        observe(0, &st, h0);
        let mut drift: f64 = 0.0;
        for k in 1..=steps {
            self.step(&mut st);
            let h = self.energy(&st);
            if !h.is_finite() {
                return Err(Error::BlowUp { step: k });
            }
            drift = drift.max((h - h0).abs());
            observe(k, &st, h);
        }
        Ok((PhasePoint { q: st.q, p: st.p }, h0, drift))
    }
}

/// Integrate `s` for duration `tau` (snapped to a multiple of `dt`).
pub fn evolve(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    y: &str,
    s: &PhasePoint,
    tau: f64,
    integ: &IntegratorSpec,
) -> Result<Trajectory> {
    evolve_observed(model, ctx, y, s, tau, integ, |_, _, _, _| {})
}

/// [`evolve`] with a per-step observer `(time, q, p, energy)`.
pub fn evolve_observed(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    y: &str,
    s: &PhasePoint,
    tau: f64,
    integ: &IntegratorSpec,
    mut observe: impl FnMut(f64, &[f64], &[f64], f64),
) -> Result<Trajectory> {
    integ.validate()?;
    if !(tau >= 0.0) {
        return Err(Error::contract("duration must be nonnegative"));
    }
    if s.dim() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: s.dim() });
    }
    let modifier = ctx.modifier(y)?;
    let (steps, snap) = integ.snap(tau);
    let flow = Flow::new(model, modifier, integ.dt);
    let dt = integ.dt;
    let (final_point, h0, drift) = flow.run(s, steps, |k, st, h| observe(k as f64 * dt, &st.q, &st.p, h))?;
    Ok(Trajectory {
        initial: s.clone(),
        final_point,
        duration: steps as f64 * dt,
        requested_duration: tau,
        snap,
        steps,
        initial_energy: h0,
        energy_drift: drift,
        invalid: drift > integ.drift_threshold * h0.abs().max(1.0),
    })
}

/// Sup-norm distance between `s` and the result of evolving, reversing
/// momenta, evolving again and reversing once more.
pub fn reversibility_check(
    model: &HamiltonianModel,
    ctx: &ConditioningContext,
    y: &str,
    s: &PhasePoint,
    tau: f64,
    integ: &IntegratorSpec,
) -> Result<f64> {
    let forward = evolve(model, ctx, y, s, tau, integ)?;
    let back = evolve(model, ctx, y, &time_reverse(&forward.final_point), tau, integ)?;
    Ok(time_reverse(&back.final_point).distance_inf(s))
}
