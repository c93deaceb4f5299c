//! Game definitions shared by every other module.
//!
//! Atomic games have finitely many players with scalar strategies in closed
//! intervals. Non-atomic games have finitely many populations, each a
//! continuum of mass `m_i` spread over a finite action set. Both are exposed
//! as oracle traits; the free functions in [`atomic`] and [`nonatomic`]
//! compute total costs, externalities, Nash certificates and social optima
//! against any implementation.

pub mod atomic;
pub mod fd;
pub mod nonatomic;

use std::ops::{Deref, Range};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{vecops, Error, Result};

pub use atomic::{
    certify_nash_atomic, externality_atomic, marginal_costs, nash_residual_atomic, optimality_residual_atomic,
    social_optimum_atomic, total_cost_atomic, AtomicGame, FnAtomicGame,
};
pub use nonatomic::{
    best_response_nonatomic, certify_nash_nonatomic, externality_nonatomic, logit_response, nash_residual_nonatomic,
    optimality_residual_nonatomic, social_optimum_nonatomic, total_cost_nonatomic, total_costs, wardrop_gap,
    AffinePopulationGame, FnNonAtomicGame, NonAtomicGame,
};

/// Default tolerance for Nash and optimality certificates.
pub const CERTIFY_TOL: f64 = 1e-6;
/// Default tolerance for mass conservation of population states.
pub const MASS_TOL: f64 = 1e-8;

/// Closed strategy interval; either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::invalid_spec(format!(
                "strategy interval [{lower}, {upper}] is empty"
            )));
        }
        Ok(Interval { lower, upper })
    }

    pub const fn real_line() -> Self {
        Interval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// Projection onto the interval; identity on an unbounded side.
    pub fn project(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

macro_rules! vector_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(v)
            }
        }
    };
}

vector_newtype!(
    /// Joint strategy of an atomic game, one scalar per player.
    StrategyProfile
);
vector_newtype!(
    /// Payments: per player (atomic), per population-action pair (non-atomic)
    /// or per edge (routing).
    IncentiveVector
);
vector_newtype!(
    /// Flattened population state: the blocks of [`PopulationLayout`] laid end to end.
    StrategyDistribution
);

impl IncentiveVector {
    pub fn zeros(n: usize) -> Self {
        IncentiveVector(vec![0.0; n])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl StrategyDistribution {
    /// Validates mass conservation and nonnegativity against `layout`.
    pub fn new(layout: &PopulationLayout, values: Vec<f64>) -> Result<Self> {
        layout.check_feasible(&values, MASS_TOL)?;
        Ok(StrategyDistribution(values))
    }
}

/// Masses and action counts of the populations of a non-atomic game.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationLayout {
    masses: Vec<f64>,
    offsets: Vec<usize>,
}

impl PopulationLayout {
    /// `populations` lists `(mass, action count)` pairs.
    pub fn new(populations: &[(f64, usize)]) -> Result<Self> {
        if populations.is_empty() {
            return Err(Error::invalid_spec("a non-atomic game needs at least one population"));
        }
        let mut offsets = vec![0];
        let mut masses = Vec::with_capacity(populations.len());
        for (i, &(mass, actions)) in populations.iter().enumerate() {
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(Error::invalid_spec(format!(
                    "population {i} has non-positive mass {mass}"
                )));
            }
            if actions == 0 {
                return Err(Error::invalid_spec(format!("population {i} has no actions")));
            }
            masses.push(mass);
            offsets.push(offsets[i] + actions);
        }
        Ok(PopulationLayout { masses, offsets })
    }

    pub fn n_populations(&self) -> usize {
        self.masses.len()
    }

    /// Total number of (population, action) pairs.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn n_actions(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn index(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.n_populations() || j >= self.n_actions(i) {
            return Err(Error::invalid_argument(format!(
                "no action ({i}, {j}) in this game"
            )));
        }
        Ok(self.offsets[i] + j)
    }

    pub fn check_feasible(&self, x: &[f64], tol: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid_argument(format!(
                "distribution has length {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        for i in 0..self.n_populations() {
            let block = &x[self.block(i)];
            if let Some(v) = block.iter().find(|v| !(**v >= -tol)) {
                return Err(Error::invalid_argument(format!(
                    "population {i} has negative or NaN entry {v}"
                )));
            }
            let total: f64 = block.iter().sum();
            if (total - self.masses[i]).abs() > tol * (1.0 + self.masses[i]) {
                return Err(Error::invalid_argument(format!(
                    "population {i} carries mass {total}, expected {}",
                    self.masses[i]
                )));
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.check_feasible(x, tol).is_ok()
    }

    /// Blockwise Euclidean projection onto the product of scaled simplices.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.n_populations() {
            out.extend(vecops::project_simplex(&v[self.block(i)], self.masses[i]));
        }
        out
    }

    pub fn uniform(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.n_populations() {
            let n = self.n_actions(i);
            out.extend(std::iter::repeat_n(self.masses[i] / n as f64, n));
        }
        out
    }

    /// Uniformly distributed point of the product of simplices.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.n_populations() {
            let e: Vec<f64> = (0..self.n_actions(i))
                .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                .collect();
            let s: f64 = e.iter().sum();
            out.extend(e.iter().map(|v| self.masses[i] * v / s));
        }
        out
    }
}

/// Outcome of a first-order certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub passed: bool,
    pub residual: f64,
}

impl Certificate {
    pub(crate) fn from_residual(residual: f64, tol: f64) -> Self {
        Certificate {
            passed: residual <= tol,
            residual,
        }
    }
}

/// Iteration limits for the inner solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iterations: 200_000,
        }
    }
}

pub(crate) fn finite(v: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation(format!("{} returned {v}", what())))
    }
}

pub(crate) fn finite_vec(v: Vec<f64>, what: impl FnOnce() -> String) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Evaluation(format!("{} returned a non-finite entry", what())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn interval_rejects_inverted_bounds() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        let r = Interval::real_line();
        assert_eq!(r.project(-1e300), -1e300);
        let b = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(b.project(2.0), 1.0);
        assert_eq!(b.project(-2.0), 0.0);
    }

    #[test]
    fn layout_validation() {
        assert!(PopulationLayout::new(&[(0.0, 2)]).is_err());
        assert!(PopulationLayout::new(&[(1.0, 0)]).is_err());
        let l = PopulationLayout::new(&[(1.0, 2), (2.0, 3)]).unwrap();
        assert_eq!(l.dim(), 5);
        assert_eq!(l.block(1), 2..5);
        assert!(l.is_feasible(&[0.5, 0.5, 1.0, 0.5, 0.5], MASS_TOL));
        assert!(!l.is_feasible(&[0.5, 0.6, 1.0, 0.5, 0.5], MASS_TOL));
        assert!(!l.is_feasible(&[1.5, -0.5, 1.0, 0.5, 0.5], MASS_TOL));
        assert!(l.index(1, 3).is_err());
        assert_eq!(l.index(1, 2).unwrap(), 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert!(l.is_feasible(&l.random(&mut rng), 1e-12));
        }
        assert!(StrategyDistribution::new(&l, l.uniform()).is_ok());
    }
}
