//! Two-timescale coupled dynamics.
//!
//! Strategies follow `x_{k+1} = (1 − γ_k) x_k + γ_k f(x_k, p_k)` for one of
//! the [`StrategyUpdateRule`]s, and incentives follow
//! `p_{k+1} = (1 − β_k) p_k + β_k e(x_k)`, with `β_k / γ_k → 0`.

mod rule;
mod runner;
mod schedule;
mod system;
mod trajectory;

pub use rule::{Regularizer, ResolvedRule, StrategyUpdateRule};
pub use runner::{
    fixed_point_residual, run_coupled, run_with_target, step_incentive, step_strategy, ExternalityTarget,
    IncentiveTarget, RunConfig, CONVERGENCE_STREAK,
};
pub use schedule::{ScheduleReport, StepSchedule};
pub use system::{AtomicSystem, CoupledGame, NonAtomicSystem};
pub use trajectory::{RunSummary, TrajectoryPoint, TrajectoryRecord};
