//! Numerical verification around the coupled dynamics: certifying that an
//! incentive is an optimal fixed point, probing the slow incentive ODE,
//! sampling the stability conditions, the gradient-descent baseline and the
//! two-link counterexample where that baseline fails.

mod baseline;
mod certify;
mod conditions;
mod counterexample;
mod ode;
mod uniqueness;

pub use baseline::{
    equilibrium_cost_gradient, gradient_baseline_step, two_link_clarke_gradient, GradientBaseline,
    GradientEstimator, BASELINE_FD_SCALE,
};
pub use certify::{verify_fixed_point_optimality, FixedPointReport};
pub use conditions::{
    check_cross_partial_condition, check_lyapunov_condition, CrossPartialReport, CrossPartialSample,
    DecrementSample, LyapunovReport, OrthantConditions, QuadraticForm, CROSS_PARTIAL_FLOOR,
};
pub use counterexample::{
    reproduce_counterexample, two_link_equilibrium_cost, two_link_equilibrium_share, two_link_grid,
    CounterexampleOptions, CounterexampleReport, GridPoint, RunOutcome, SubCheck,
};
pub use ode::{ode_probe_slow_dynamics, OdeProbeConfig, OdeTrajectoryReport, StabilityReport};
pub use uniqueness::{multistart_uniqueness_probe, UniquenessReport, UNIQUENESS_THRESHOLD};
