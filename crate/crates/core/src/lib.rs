//! Externality-based adaptive incentives.
//!
//! A planner repeatedly sets per-player payments (or per-edge tolls) while the
//! players adapt their strategies. Strategies move on a fast timescale, the
//! incentives on a slow one, and each incentive update blends the current
//! payment with the externality the players currently impose on everyone else.
//! The fixed point of the coupled iteration is the payment that makes the Nash
//! equilibrium socially optimal.
//!
//! Module map:
//!
//! * [`game`]: atomic and non-atomic game oracles, total costs, externalities,
//!   Nash certification and social optima.
//! * [`dynamics`]: step schedules, strategy update rules and the coupled runner.
//! * [`aggregative`]: the quadratic networked aggregative game.
//! * [`routing`]: non-atomic routing on directed networks with edge tolls.
//! * [`analysis`]: fixed-point certification, slow-ODE probes, stability
//!   conditions, the gradient baseline and the two-link counterexample.
//! * [`par`]: data-parallel helpers with a sequential fallback.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregative;
pub mod analysis;
pub mod dynamics;
mod error;
pub mod game;
pub mod par;
pub mod routing;
pub mod vecops;

pub use error::{Error, Result};
