use serde::{Deserialize, Serialize};

use super::trajectory::{TrajectoryPoint, TrajectoryRecord};
use super::{CoupledGame, StepSchedule, StrategyUpdateRule};
use crate::{vecops, Error, Result};

/// Consecutive iterations with residual at or below tolerance required to stop.
pub const CONVERGENCE_STREAK: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schedule: StepSchedule,
    #[serde(default)]
    pub rule: StrategyUpdateRule,
    #[serde(default = "RunConfig::default_max_iterations")]
    pub max_iterations: u64,
    #[serde(default = "RunConfig::default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "RunConfig::default_record_every")]
    pub record_every: u64,
    #[serde(default)]
    pub seed: u64,
    /// Tolerance handed to inner equilibrium and best-response solvers.
    #[serde(default = "RunConfig::default_inner_tol")]
    pub inner_tol: f64,
    /// The run is declared divergent once `‖x‖∞ + ‖p‖∞` exceeds this.
    #[serde(default = "RunConfig::default_divergence_bound")]
    pub divergence_bound: f64,
}

impl RunConfig {
    fn default_max_iterations() -> u64 {
        100_000
    }
    fn default_convergence_tol() -> f64 {
        1e-6
    }
    fn default_record_every() -> u64 {
        1
    }
    fn default_inner_tol() -> f64 {
        1e-10
    }
    fn default_divergence_bound() -> f64 {
        1e8
    }

    pub fn new(schedule: StepSchedule, rule: StrategyUpdateRule) -> Self {
        RunConfig {
            schedule,
            rule,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid_argument("max_iterations must be at least 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid_argument("convergence_tol must be positive"));
        }
        if self.record_every < 1 {
            return Err(Error::invalid_argument("record_every must be at least 1"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::invalid_argument("inner_tol must be positive"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::invalid_argument("divergence_bound must be positive"));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schedule: StepSchedule::default(),
            rule: StrategyUpdateRule::default(),
            max_iterations: Self::default_max_iterations(),
            convergence_tol: Self::default_convergence_tol(),
            record_every: Self::default_record_every(),
            seed: 0,
            inner_tol: Self::default_inner_tol(),
            divergence_bound: Self::default_divergence_bound(),
        }
    }
}

/// What the incentive moves towards: `p_{k+1} = (1 − β_k) p_k + β_k t(x_k, p_k)`.
pub trait IncentiveTarget: Sync {
    fn target<G: CoupledGame + ?Sized>(&self, game: &G, x: &[f64], p: &[f64], tol: f64) -> Result<Vec<f64>>;
}

/// The externality-tracking update `t(x, p) = e(x)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExternalityTarget;

impl IncentiveTarget for ExternalityTarget {
    fn target<G: CoupledGame + ?Sized>(&self, game: &G, x: &[f64], _p: &[f64], _tol: f64) -> Result<Vec<f64>> {
        game.externality(x)
    }
}

fn check_step(w: f64, name: &str) -> Result<()> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::invalid_argument(format!("{name} must lie in (0, 1], got {w}")));
    }
    Ok(())
}

fn check_incentive<G: CoupledGame + ?Sized>(game: &G, p: &[f64]) -> Result<()> {
    if p.len() != game.incentive_dim() {
        return Err(Error::invalid_argument(format!(
            "incentive vector has length {}, expected {}",
            p.len(),
            game.incentive_dim()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_argument("incentive vector must be finite"));
    }
    Ok(())
}

/// `(1 − γ) x + γ f(x, p)` under `rule`.
pub fn step_strategy<G: CoupledGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    rule: &StrategyUpdateRule,
    gamma: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    check_step(gamma, "strategy step")?;
    game.check_strategy(x)?;
    check_incentive(game, p)?;
    rule.resolve(game, x)?.step(game, x, p, gamma, tol)
}

/// `(1 − β) p + β e(x)`.
pub fn step_incentive<G: CoupledGame + ?Sized>(game: &G, x: &[f64], p: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_step(beta, "incentive step")?;
    check_incentive(game, p)?;
    Ok(vecops::blend(p, &game.externality(x)?, beta))
}

/// `‖f(x, p) − x‖∞ + ‖e(x) − p‖∞`.
pub fn fixed_point_residual<G: CoupledGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    rule: &StrategyUpdateRule,
    tol: f64,
) -> Result<f64> {
    game.check_strategy(x)?;
    check_incentive(game, p)?;
    let f = rule.resolve(game, x)?.target(game, x, p, tol)?;
    let e = game.externality(x)?;
    Ok(vecops::dist_inf(&f, x) + vecops::dist_inf(&e, p))
}

/// Runs the coupled strategy/externality iteration from `(x0, p0)`.
///
/// Stops once the fixed-point residual has been within tolerance for
/// [`CONVERGENCE_STREAK`] consecutive iterations. Running out of iterations or
/// diverging yields [`Error::NotConverged`] carrying the trajectory.
pub fn run_coupled<G: CoupledGame + ?Sized>(
    game: &G,
    x0: &[f64],
    p0: &[f64],
    config: &RunConfig,
) -> Result<TrajectoryRecord> {
    run_with_target(game, x0, p0, config, &ExternalityTarget)
}

/// [`run_coupled`] with an arbitrary incentive target.
pub fn run_with_target<G, T>(game: &G, x0: &[f64], p0: &[f64], config: &RunConfig, target: &T) -> Result<TrajectoryRecord>
where
    G: CoupledGame + ?Sized,
    T: IncentiveTarget + ?Sized,
{
    config.validate()?;
    game.check_strategy(x0)?;
    check_incentive(game, p0)?;
    let rule = config.rule.resolve(game, x0)?;
    let tol = config.inner_tol;

    let mut x = x0.to_vec();
    let mut p = p0.to_vec();
    let mut points = Vec::new();
    let mut streak = 0;
    let mut max_state_norm: f64 = 0.0;
    let mut k = 0u64;
    let (converged, diverged) = loop {
        let state_norm = vecops::norm_inf(&x) + vecops::norm_inf(&p);
        max_state_norm = max_state_norm.max(state_norm);
        let diverged = !(state_norm <= config.divergence_bound);
        let (f, t, residual) = if diverged {
            (x.clone(), p.clone(), f64::NAN)
        } else {
            let f = rule.target(game, &x, &p, tol)?;
            let t = target.target(game, &x, &p, tol)?;
            let r = vecops::dist_inf(&f, &x) + vecops::dist_inf(&t, &p);
            (f, t, r)
        };
        streak = if residual <= config.convergence_tol { streak + 1 } else { 0 };
        let converged = streak >= CONVERGENCE_STREAK;
        let done = converged || diverged || k >= config.max_iterations;
        if done || k.is_multiple_of(config.record_every) {
            let social_cost = match game.social_cost(&x) {
                Ok(c) => c,
                Err(_) if diverged => f64::NAN,
                Err(e) => return Err(e),
            };
            points.push(TrajectoryPoint {
                k,
                residual,
                social_cost,
                x: x.clone(),
                p: p.clone(),
            });
        }
        if done {
            break (converged, diverged);
        }
        x = vecops::blend(&x, &f, config.schedule.gamma(k));
        p = vecops::blend(&p, &t, config.schedule.beta(k));
        k += 1;
    };

    let record = TrajectoryRecord {
        points,
        iterations_used: k,
        converged,
        diverged,
        max_state_norm,
    };
    if converged {
        Ok(record)
    } else {
        Err(Error::NotConverged(Box::new(record)))
    }
}
