use incentive_core::aggregative::AggregativeGame;
use incentive_core::dynamics::{AtomicSystem, CoupledGame, NonAtomicSystem};
use incentive_core::game::{AffinePopulationGame, PopulationLayout};
use incentive_core::routing::{self, EdgeTollSystem, RoutingNetwork};
use nalgebra::DMatrix;

use crate::config::{AffinePopulationSpec, GameSpec};

/// A constructed game, kept concrete so analyses specific to one family can
/// reach the underlying model.
pub enum Experiment {
    Aggregative(AtomicSystem<AggregativeGame>),
    Routing(EdgeTollSystem),
    Population(NonAtomicSystem<AffinePopulationGame>),
}

impl Experiment {
    pub fn build(spec: &GameSpec) -> incentive_core::Result<Self> {
        Ok(match spec {
            GameSpec::Builtin { name } => Experiment::Routing(EdgeTollSystem::new(routing::fixture(name)?)),
            GameSpec::Aggregative(g) => Experiment::Aggregative(AtomicSystem(g.clone())),
            GameSpec::Routing { network } => Experiment::Routing(EdgeTollSystem::new(network.clone())),
            GameSpec::AffinePopulation(spec) => Experiment::Population(NonAtomicSystem(affine(spec)?)),
        })
    }

    pub fn coupled(&self) -> &dyn CoupledGame {
        match self {
            Experiment::Aggregative(g) => g,
            Experiment::Routing(g) => g,
            Experiment::Population(g) => g,
        }
    }

    pub fn aggregative(&self) -> Option<&AggregativeGame> {
        match self {
            Experiment::Aggregative(g) => Some(&g.0),
            _ => None,
        }
    }

    pub fn network(&self) -> Option<&RoutingNetwork> {
        match self {
            Experiment::Routing(g) => Some(g.network()),
            _ => None,
        }
    }
}

fn affine(spec: &AffinePopulationSpec) -> incentive_core::Result<AffinePopulationGame> {
    let pops: Vec<(f64, usize)> = spec.populations.iter().map(|p| (p.mass, p.actions)).collect();
    let layout = PopulationLayout::new(&pops)?;
    let n = layout.dim();
    if spec.matrix.len() != n || spec.matrix.iter().any(|r| r.len() != n) {
        return Err(incentive_core::Error::InvalidSpec(format!("cost matrix must be {n}×{n}")));
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| spec.matrix[i][j]);
    AffinePopulationGame::new(layout, matrix, spec.offset.clone())
}
