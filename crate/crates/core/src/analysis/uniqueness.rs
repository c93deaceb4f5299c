use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::CoupledGame;
use crate::par::Execution;
use crate::{vecops, Error, Result};

/// Spread between equilibria above which uniqueness is in doubt.
pub const UNIQUENESS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub incentive: Vec<f64>,
    pub n_starts: usize,
    /// Equilibrium outcomes (edge flows for routing) per start.
    pub outcomes: Vec<Vec<f64>>,
    pub max_pairwise_distance: f64,
    /// Set when the spread exceeds [`UNIQUENESS_THRESHOLD`].
    pub possible_violation: bool,
}

/// Solves for the equilibrium under `p` from `n_starts` random feasible
/// starts drawn from a ChaCha8 stream seeded with `seed`, and reports how far
/// apart the resulting outcomes are.
pub fn multistart_uniqueness_probe<G: CoupledGame + ?Sized>(
    game: &G,
    p: &[f64],
    n_starts: usize,
    seed: u64,
    tol: f64,
    execution: Execution,
) -> Result<UniquenessReport> {
    if n_starts == 0 {
        return Err(Error::invalid_argument("need at least one start"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..n_starts).map(|_| game.random_strategy(&mut rng)).collect();
    let outcomes = execution
        .map(&starts, |x0| game.equilibrium(p, x0, tol).map(|x| game.outcome(&x)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut max_pairwise_distance: f64 = 0.0;
    for (i, a) in outcomes.iter().enumerate() {
        for b in &outcomes[i + 1..] {
            max_pairwise_distance = max_pairwise_distance.max(vecops::dist_inf(a, b));
        }
    }
    Ok(UniquenessReport {
        incentive: p.to_vec(),
        n_starts,
        outcomes,
        max_pairwise_distance,
        possible_violation: max_pairwise_distance > UNIQUENESS_THRESHOLD,
    })
}
