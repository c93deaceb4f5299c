use serde::{Deserialize, Serialize};

use crate::dynamics::{CoupledGame, IncentiveTarget};
use crate::game::IncentiveVector;
use crate::{vecops, Error, Result};

/// Relative finite-difference step used by the baseline: `1e-4·(1 + ‖p‖₂)`.
pub const BASELINE_FD_SCALE: f64 = 1e-4;

/// How the baseline estimates `∇_p Φ(x*(p))`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradientEstimator {
    /// Central differences with step `1e-4·(1 + ‖p‖₂)`.
    #[default]
    FiniteDifference,
    /// Central differences with a fixed step.
    FixedStep { step: f64 },
    /// Two-link network: finite differences away from the kink `|p₁ − p₂| = 1`
    /// and the closed-form Clarke element on it.
    TwoLink,
}

fn default_step(p: &[f64]) -> f64 {
    BASELINE_FD_SCALE * (1.0 + vecops::norm2(p))
}

/// The element of the Clarke subdifferential of the two-link equilibrium
/// social cost `((p₁ − p₂)² + 1)/2` (clipped at 1) used by the baseline:
/// `(d, −d)` with `d = p₁ − p₂` inside the kink, zero outside and on it.
pub fn two_link_clarke_gradient(p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != 2 {
        return Err(Error::invalid_argument("the two-link gradient needs two tolls"));
    }
    let d = p[0] - p[1];
    Ok(if d.abs() < 1.0 { vec![d, -d] } else { vec![0.0, 0.0] })
}

/// Central-difference gradient of `p ↦ Φ(x*(p))` with step `h`.
pub fn equilibrium_cost_gradient<G: CoupledGame + ?Sized>(game: &G, p: &[f64], h: f64, tol: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid_argument("finite-difference step must be positive"));
    }
    let warm = game.equilibrium(p, &game.default_strategy(), tol)?;
    let cost = |q: &[f64]| -> Result<f64> { game.social_cost(&game.equilibrium(q, &warm, tol)?) };
    let mut q = p.to_vec();
    (0..p.len())
        .map(|j| {
            q[j] = p[j] + h;
            let up = cost(&q)?;
            q[j] = p[j] - h;
            let down = cost(&q)?;
            q[j] = p[j];
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

impl GradientEstimator {
    pub fn gradient<G: CoupledGame + ?Sized>(&self, game: &G, p: &[f64], tol: f64) -> Result<Vec<f64>> {
        match *self {
            GradientEstimator::FiniteDifference => equilibrium_cost_gradient(game, p, default_step(p), tol),
            GradientEstimator::FixedStep { step } => equilibrium_cost_gradient(game, p, step, tol),
            GradientEstimator::TwoLink => {
                let h = default_step(p);
                let d = (p[0] - p[1]).abs();
                // A central difference straddling the kink mixes both branches.
                if (d - 1.0).abs() <= 2.0 * h {
                    two_link_clarke_gradient(p)
                } else {
                    equilibrium_cost_gradient(game, p, h, tol)
                }
            }
        }
    }
}

/// `p − β g` where `g` estimates `∇_p Φ(x*(p))`.
pub fn gradient_baseline_step<G: CoupledGame + ?Sized>(
    game: &G,
    p: &[f64],
    beta: f64,
    estimator: GradientEstimator,
    tol: f64,
) -> Result<IncentiveVector> {
    if p.len() != game.incentive_dim() {
        return Err(Error::invalid_argument(format!(
            "incentive vector has length {}, expected {}",
            p.len(),
            game.incentive_dim()
        )));
    }
    if matches!(estimator, GradientEstimator::TwoLink) && p.len() != 2 {
        return Err(Error::invalid_argument("the two-link estimator needs two tolls"));
    }
    let g = estimator.gradient(game, p, tol)?;
    Ok(IncentiveVector(p.iter().zip(&g).map(|(a, b)| a - beta * b).collect()))
}

/// Incentive target of the gradient baseline, `t(x, p) = p − ∇_p Φ(x*(p))`,
/// so the runner's blend `(1 − β) p + β t` is a gradient step of size `β`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GradientBaseline {
    pub estimator: GradientEstimator,
}

impl IncentiveTarget for GradientBaseline {
    fn target<G: CoupledGame + ?Sized>(&self, game: &G, _x: &[f64], p: &[f64], tol: f64) -> Result<Vec<f64>> {
        Ok(gradient_baseline_step(game, p, 1.0, self.estimator, tol)?.into_inner())
    }
}
