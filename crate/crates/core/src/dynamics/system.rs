use rand::RngCore;

use crate::game::atomic::{self, AtomicGame};
use crate::game::nonatomic::{self, NonAtomicGame};
use crate::game::{PopulationLayout, SolverOptions, MASS_TOL};
use crate::{Error, Result};

/// A game seen through the coupled strategy/incentive iteration: a strategy
/// space, an equilibrium map `p ↦ x*(p)`, the externality `x ↦ e(x)` and the
/// social cost. Atomic games, non-atomic games and edge-tolled routing games
/// all implement it, so the runner and the analyses are written once.
pub trait CoupledGame: Sync {
    fn strategy_dim(&self) -> usize;

    fn incentive_dim(&self) -> usize;

    /// Simplex structure of the strategy space, if any.
    fn population_layout(&self) -> Option<&PopulationLayout> {
        None
    }

    fn check_strategy(&self, x: &[f64]) -> Result<()>;

    fn project(&self, v: &[f64]) -> Vec<f64>;

    /// Nash equilibrium under incentive `p`, warm-started from `warm`.
    fn equilibrium(&self, p: &[f64], warm: &[f64], tol: f64) -> Result<Vec<f64>>;

    /// Simultaneous best responses of all players (or populations) to `x`.
    fn best_response(&self, x: &[f64], p: &[f64], tol: f64) -> Result<Vec<f64>>;

    /// The map whose VI characterises equilibria: per-player marginal total
    /// costs (atomic) or total action costs (non-atomic).
    fn cost_operator(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>>;

    fn externality(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn social_cost(&self, x: &[f64]) -> Result<f64>;

    fn social_optimum(&self, tol: f64) -> Result<Vec<f64>>;

    /// First-order optimality residual of the social cost at `x`.
    fn optimality_residual(&self, x: &[f64]) -> Result<f64>;

    /// Equilibrium residual of `x` under incentive `p`.
    fn nash_residual(&self, x: &[f64], p: &[f64]) -> Result<f64>;

    /// Quantity that identifies equilibria uniquely: edge flows for routing,
    /// the strategy itself otherwise.
    fn outcome(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn random_strategy(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    fn default_strategy(&self) -> Vec<f64>;

    /// The incentive whose equilibrium is socially optimal; generically `e(x†)`.
    fn optimal_incentive(&self, tol: f64) -> Result<Vec<f64>> {
        let opt = self.social_optimum(tol)?;
        self.externality(&opt)
    }

    /// Lipschitz bound of [`CoupledGame::cost_operator`] near `x`.
    fn cost_lipschitz(&self, x: &[f64]) -> Result<f64>;
}

fn check_len(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::invalid_argument(format!(
            "{what} has length {}, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

/// Adapts an [`AtomicGame`] to the coupled iteration.
#[derive(Debug, Clone)]
pub struct AtomicSystem<G>(pub G);

impl<G: AtomicGame> CoupledGame for AtomicSystem<G> {
    fn strategy_dim(&self) -> usize {
        self.0.n_players()
    }

    fn incentive_dim(&self) -> usize {
        self.0.n_players()
    }

    fn check_strategy(&self, x: &[f64]) -> Result<()> {
        check_len(x, self.0.n_players(), "strategy profile")?;
        if !atomic::is_feasible(&self.0, x, 1e-9) {
            return Err(Error::invalid_argument("strategy profile is outside the strategy box"));
        }
        Ok(())
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        atomic::project(&self.0, v)
    }

    fn equilibrium(&self, p: &[f64], warm: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.0.nash_equilibrium(p, warm, SolverOptions::with_tol(tol))
    }

    fn best_response(&self, x: &[f64], p: &[f64], tol: f64) -> Result<Vec<f64>> {
        (0..self.0.n_players())
            .map(|i| self.0.best_response(x, p, i, tol))
            .collect()
    }

    fn cost_operator(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        check_len(p, self.0.n_players(), "incentive vector")?;
        let mut g = atomic::marginal_costs(&self.0, x)?;
        g.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        Ok(g)
    }

    fn externality(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(atomic::externality_atomic(&self.0, x)?.into_inner())
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        self.0.social_cost(x)
    }

    fn social_optimum(&self, tol: f64) -> Result<Vec<f64>> {
        self.0.social_optimum(SolverOptions::with_tol(tol))
    }

    fn optimality_residual(&self, x: &[f64]) -> Result<f64> {
        atomic::optimality_residual_atomic(&self.0, x)
    }

    fn nash_residual(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        atomic::nash_residual_atomic(&self.0, x, p)
    }

    fn random_strategy(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        use rand::Rng;
        (0..self.0.n_players())
            .map(|i| {
                let b = self.0.bounds(i);
                let lo = if b.lower.is_finite() { b.lower } else { b.upper.min(1.0) - 2.0 };
                let hi = if b.upper.is_finite() { b.upper } else { lo.max(-1.0) + 2.0 };
                if hi > lo {
                    rng.gen_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect()
    }

    fn default_strategy(&self) -> Vec<f64> {
        self.project(&vec![0.0; self.0.n_players()])
    }

    fn cost_lipschitz(&self, x: &[f64]) -> Result<f64> {
        self.0.game_lipschitz(x)
    }
}

/// Adapts a [`NonAtomicGame`] to the coupled iteration.
#[derive(Debug, Clone)]
pub struct NonAtomicSystem<G>(pub G);

impl<G: NonAtomicGame> CoupledGame for NonAtomicSystem<G> {
    fn strategy_dim(&self) -> usize {
        self.0.layout().dim()
    }

    fn incentive_dim(&self) -> usize {
        self.0.layout().dim()
    }

    fn population_layout(&self) -> Option<&PopulationLayout> {
        Some(self.0.layout())
    }

    fn check_strategy(&self, x: &[f64]) -> Result<()> {
        self.0.layout().check_feasible(x, MASS_TOL)
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        self.0.layout().project(v)
    }

    fn equilibrium(&self, p: &[f64], warm: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.0.nash_equilibrium(p, warm, SolverOptions::with_tol(tol))
    }

    fn best_response(&self, x: &[f64], p: &[f64], _tol: f64) -> Result<Vec<f64>> {
        let c = nonatomic::total_costs(&self.0, x, p)?;
        Ok(nonatomic::best_response_nonatomic(self.0.layout(), &c))
    }

    fn cost_operator(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        nonatomic::total_costs(&self.0, x, p)
    }

    fn externality(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(nonatomic::externality_nonatomic(&self.0, x)?.into_inner())
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        self.0.social_cost(x)
    }

    fn social_optimum(&self, tol: f64) -> Result<Vec<f64>> {
        self.0.social_optimum(SolverOptions::with_tol(tol))
    }

    fn optimality_residual(&self, x: &[f64]) -> Result<f64> {
        nonatomic::optimality_residual_nonatomic(&self.0, x)
    }

    fn nash_residual(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        nonatomic::nash_residual_nonatomic(&self.0, x, p)
    }

    fn random_strategy(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.0.layout().random(rng)
    }

    fn default_strategy(&self) -> Vec<f64> {
        self.0.layout().uniform()
    }

    fn cost_lipschitz(&self, x: &[f64]) -> Result<f64> {
        self.0.game_lipschitz(x)
    }
}

impl<T: CoupledGame + ?Sized> CoupledGame for &T {
    fn strategy_dim(&self) -> usize {
        (**self).strategy_dim()
    }
    fn incentive_dim(&self) -> usize {
        (**self).incentive_dim()
    }
    fn population_layout(&self) -> Option<&PopulationLayout> {
        (**self).population_layout()
    }
    fn check_strategy(&self, x: &[f64]) -> Result<()> {
        (**self).check_strategy(x)
    }
    fn project(&self, v: &[f64]) -> Vec<f64> {
        (**self).project(v)
    }
    fn equilibrium(&self, p: &[f64], warm: &[f64], tol: f64) -> Result<Vec<f64>> {
        (**self).equilibrium(p, warm, tol)
    }
    fn best_response(&self, x: &[f64], p: &[f64], tol: f64) -> Result<Vec<f64>> {
        (**self).best_response(x, p, tol)
    }
    fn cost_operator(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        (**self).cost_operator(x, p)
    }
    fn externality(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).externality(x)
    }
    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        (**self).social_cost(x)
    }
    fn social_optimum(&self, tol: f64) -> Result<Vec<f64>> {
        (**self).social_optimum(tol)
    }
    fn optimality_residual(&self, x: &[f64]) -> Result<f64> {
        (**self).optimality_residual(x)
    }
    fn nash_residual(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        (**self).nash_residual(x, p)
    }
    fn outcome(&self, x: &[f64]) -> Vec<f64> {
        (**self).outcome(x)
    }
    fn random_strategy(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (**self).random_strategy(rng)
    }
    fn default_strategy(&self) -> Vec<f64> {
        (**self).default_strategy()
    }
    fn optimal_incentive(&self, tol: f64) -> Result<Vec<f64>> {
        (**self).optimal_incentive(tol)
    }
    fn cost_lipschitz(&self, x: &[f64]) -> Result<f64> {
        (**self).cost_lipschitz(x)
    }
}
