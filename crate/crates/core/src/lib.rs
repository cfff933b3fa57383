//! Random walks with creation and annihilation on the discrete torus, the
//! semilinear heat equation they approximate, and finite-time blow-up.
//!
//! * [`model`]: rate functions, initial profiles and model parameters.
//! * [`simulator`]: exact event-driven simulation and the two couplings.
//! * [`pde`]: the semidiscrete heat equation, blow-up estimates and the
//!   comparison principle.
//! * [`bdchain`]: the one-dimensional birth-death chain bounding total mass.
//! * [`metrics`]: density fields and distances to the PDE.
//! * [`harness`]: configured experiments and their reports.

pub mod bdchain;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod pde;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod ratetable;

/// Scientific notation with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
