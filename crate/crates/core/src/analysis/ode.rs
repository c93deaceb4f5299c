use serde::{Deserialize, Serialize};

use crate::dynamics::CoupledGame;
use crate::par::Execution;
use crate::{vecops, Error, Result};

/// Number of evenly spaced times at which the decrement of `½‖p − p†‖²` is
/// sampled along each trajectory.
const DECREMENT_SAMPLES: usize = 11;

/// Slack allowed when checking that the distance to `p†` is nonincreasing,
/// so solver noise at the fixed point does not count as growth.
const MONOTONE_SLACK: f64 = 1e-9;

/// Forward-Euler settings for the slow incentive dynamics `ṗ = e(x*(p)) − p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeProbeConfig {
    pub step: f64,
    pub horizon: f64,
    pub start_points: Vec<Vec<f64>>,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default)]
    pub execution: Execution,
}

fn default_inner_tol() -> f64 {
    1e-10
}

impl OdeProbeConfig {
    pub fn new(step: f64, horizon: f64, start_points: Vec<Vec<f64>>) -> Self {
        OdeProbeConfig {
            step,
            horizon,
            start_points,
            inner_tol: default_inner_tol(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid_argument("Euler step must be positive"));
        }
        if !(self.horizon >= self.step && self.horizon.is_finite()) {
            return Err(Error::invalid_argument("horizon must be at least one Euler step"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::invalid_argument("inner tolerance must be positive"));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.horizon / self.step).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectoryReport {
    pub start: Vec<f64>,
    pub terminal: Vec<f64>,
    /// `‖p(T) − p†‖∞`; `None` when the integration failed.
    pub terminal_distance: Option<f64>,
    /// Largest `‖p(t) − p†‖∞` seen along the way.
    pub max_distance: f64,
    /// Whether `‖p(t) − p†‖∞` never grows over the second half of the horizon.
    pub tail_monotone: bool,
    /// `(t, (p − p†)·(e(x*(p)) − p))` at evenly spaced times.
    pub decrement_samples: Vec<(f64, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub fixed_point: Vec<f64>,
    pub step: f64,
    pub horizon: f64,
    pub trajectories: Vec<OdeTrajectoryReport>,
}

impl StabilityReport {
    /// Largest terminal distance, infinite if any trajectory failed.
    pub fn max_terminal_distance(&self) -> f64 {
        self.trajectories
            .iter()
            .map(|t| t.terminal_distance.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn all_within(&self, radius: f64) -> bool {
        self.max_terminal_distance() <= radius
    }
}

/// Integrates the slow dynamics from every start point with forward Euler,
/// warm-starting each equilibrium solve from the previous one, and reports
/// how the trajectories approach the game's optimal incentive.
pub fn ode_probe_slow_dynamics<G: CoupledGame + ?Sized>(
    game: &G,
    config: &OdeProbeConfig,
) -> Result<StabilityReport> {
    config.validate()?;
    let n = game.incentive_dim();
    if let Some(bad) = config.start_points.iter().find(|s| s.len() != n) {
        return Err(Error::invalid_argument(format!(
            "start point has length {}, expected {n}",
            bad.len()
        )));
    }
    let fixed_point = game.optimal_incentive(config.inner_tol)?;
    let trajectories = config
        .execution
        .map(&config.start_points, |start| integrate(game, config, start, &fixed_point));
    Ok(StabilityReport {
        fixed_point,
        step: config.step,
        horizon: config.horizon,
        trajectories,
    })
}

fn integrate<G: CoupledGame + ?Sized>(
    game: &G,
    config: &OdeProbeConfig,
    start: &[f64],
    fixed_point: &[f64],
) -> OdeTrajectoryReport {
    let steps = config.n_steps();
    let sample_every = (steps / (DECREMENT_SAMPLES - 1)).max(1);
    let mut p = start.to_vec();
    let mut x = game.default_strategy();
    let mut distances = Vec::with_capacity(steps + 1);
    let mut decrement_samples = Vec::new();
    let mut error = None;
    for k in 0..=steps {
        let d = vecops::dist_inf(&p, fixed_point);
        distances.push(d);
        if k == steps {
            break;
        }
        let drift = match drift(game, &p, &x, config.inner_tol) {
            Ok((eq, drift)) => {
                x = eq;
                drift
            }
            Err(e) => {
                error = Some(format!("t = {}: {e}", k as f64 * config.step));
                break;
            }
        };
        if k % sample_every == 0 {
            let offset: Vec<f64> = p.iter().zip(fixed_point).map(|(a, b)| a - b).collect();
            decrement_samples.push((k as f64 * config.step, vecops::dot(&offset, &drift)));
        }
        p.iter_mut().zip(&drift).for_each(|(a, v)| *a += config.step * v);
        if p.iter().any(|v| !v.is_finite()) {
            error = Some(format!("t = {}: trajectory left the finite range", k as f64 * config.step));
            break;
        }
    }
    let tail = &distances[distances.len() / 2..];
    OdeTrajectoryReport {
        start: start.to_vec(),
        terminal_distance: error.is_none().then(|| vecops::dist_inf(&p, fixed_point)),
        terminal: p,
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        tail_monotone: tail.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK),
        decrement_samples,
        error,
    }
}

/// `(x*(p), e(x*(p)) − p)`.
pub(crate) fn drift<G: CoupledGame + ?Sized>(
    game: &G,
    p: &[f64],
    warm: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = game.equilibrium(p, warm, tol)?;
    let e = game.externality(&x)?;
    let d = e.iter().zip(p).map(|(a, b)| a - b).collect();
    Ok((x, d))
}
