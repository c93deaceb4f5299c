use serde::{Deserialize, Serialize};

use crate::dynamics::CoupledGame;
use crate::{vecops, Error, Result};

/// Tolerance handed to the inner equilibrium and optimum solvers when
/// certifying at tolerance `tol`. Flow solvers stop on a duality gap, which
/// bounds the squared distance to the solution, hence the square.
pub(crate) fn inner_tol(tol: f64) -> f64 {
    (tol * tol).clamp(1e-14, 1e-10)
}

/// Outcome of checking that an incentive is a fixed point of the externality
/// map whose induced equilibrium is socially optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub incentive: Vec<f64>,
    pub equilibrium: Vec<f64>,
    pub social_cost: f64,
    pub tol: f64,
    /// `‖e(x*(p)) − p‖∞`.
    pub externality_gap: f64,
    pub externality_consistent: bool,
    pub optimality_residual: f64,
    pub first_order_optimal: bool,
    /// Distance between the equilibrium outcome and the social optimum outcome.
    pub optimum_distance: f64,
    pub matches_optimum: bool,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl FixedPointReport {
    /// Converts a failed report into [`Error::Inconsistency`] listing every
    /// failed check.
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::Inconsistency(self.failures.join("; ")))
        }
    }
}

/// Checks that `p` satisfies `e(x*(p)) = p`, that `x*(p)` is first-order
/// optimal for the social cost, and that it sits within `10·tol` of the
/// computed social optimum (compared through [`CoupledGame::outcome`]).
///
/// Solver errors propagate; failed checks are reported, not raised.
pub fn verify_fixed_point_optimality<G: CoupledGame + ?Sized>(
    game: &G,
    p: &[f64],
    tol: f64,
) -> Result<FixedPointReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid_argument("tolerance must be positive"));
    }
    if p.len() != game.incentive_dim() {
        return Err(Error::invalid_argument(format!(
            "incentive vector has length {}, expected {}",
            p.len(),
            game.incentive_dim()
        )));
    }
    let inner = inner_tol(tol);
    let x = game.equilibrium(p, &game.default_strategy(), inner)?;
    let e = game.externality(&x)?;
    let externality_gap = vecops::dist_inf(&e, p);
    let optimality_residual = game.optimality_residual(&x)?;
    let optimum = game.social_optimum(inner)?;
    let optimum_distance = vecops::dist_inf(&game.outcome(&x), &game.outcome(&optimum));

    let externality_consistent = externality_gap <= tol;
    let first_order_optimal = optimality_residual <= tol;
    let matches_optimum = optimum_distance <= 10.0 * tol;
    let mut failures = Vec::new();
    if !externality_consistent {
        failures.push(format!("externality gap {externality_gap:.3e} exceeds {tol:.1e}"));
    }
    if !first_order_optimal {
        failures.push(format!("optimality residual {optimality_residual:.3e} exceeds {tol:.1e}"));
    }
    if !matches_optimum {
        failures.push(format!(
            "equilibrium is {optimum_distance:.3e} from the social optimum (limit {:.1e})",
            10.0 * tol
        ));
    }
    Ok(FixedPointReport {
        incentive: p.to_vec(),
        social_cost: game.social_cost(&x)?,
        equilibrium: x,
        tol,
        externality_gap,
        externality_consistent,
        optimality_residual,
        first_order_optimal,
        optimum_distance,
        matches_optimum,
        passed: failures.is_empty(),
        failures,
    })
}
