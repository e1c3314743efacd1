//! Numerical laboratory for detailed balance between metastable states.
//!
//! Deterministic Hamiltonian models with a reaction coordinate and a
//! harmonic bath ([`model`], [`dynamics`]), microcanonical and canonical
//! samplers restricted to metastable regions ([`sampling`]), restricted
//! partition functions and entropies ([`states`]), transition-probability
//! estimators and the detailed-balance checks built on them ([`detbal`]),
//! finite-dimensional quantum analogues ([`quantum`]), a stochastic
//! replicator ([`replicator`]) and the experiment runner ([`harness`]).

pub mod detbal;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod model;
pub mod quadrature;
pub mod quantum;
pub mod replicator;
pub mod rng;
pub mod sampling;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
