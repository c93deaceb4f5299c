use rand::RngCore;

use super::assign::{route_toll_equilibrium, system_optimum_with, wardrop_equilibrium_with};
use super::frank_wolfe::FwOptions;
use super::tolls::edge_externality;
use super::RoutingNetwork;
use crate::dynamics::{run_coupled, CoupledGame, RunConfig, TrajectoryRecord};
use crate::game::nonatomic::{best_response_nonatomic, NonAtomicGame};
use crate::game::{fd, PopulationLayout, SolverOptions, MASS_TOL};
use crate::{vecops, Result};

fn fw(opts: SolverOptions) -> FwOptions {
    FwOptions {
        tol: opts.tol,
        max_iterations: opts.max_iterations,
        ..Default::default()
    }
}

fn check_len(net: &RoutingNetwork, x: &[f64]) -> Result<()> {
    if x.len() != net.n_routes() {
        return Err(crate::Error::invalid_argument(format!(
            "route flow has length {}, expected {}",
            x.len(),
            net.n_routes()
        )));
    }
    Ok(())
}

/// The routing game with per-route payments, as a generic non-atomic game.
impl NonAtomicGame for RoutingNetwork {
    fn layout(&self) -> &PopulationLayout {
        RoutingNetwork::layout(self)
    }

    /// Evaluated off the feasible set too, so finite differences work.
    fn action_costs(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self, x)?;
        Ok(self.route_sums(&self.edge_latencies(&self.edge_flow_unchecked(x))))
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        check_len(self, x)?;
        Ok(self.edge_social_cost(&self.edge_flow_unchecked(x)))
    }

    /// Route sums of marginal edge costs `l_a + w_a l'_a`.
    fn social_cost_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self, x)?;
        let w = self.edge_flow_unchecked(x);
        let m: Vec<f64> = self.edges().iter().zip(&w).map(|(e, w)| e.latency.marginal(*w)).collect();
        Ok(self.route_sums(&m))
    }

    fn nash_equilibrium(&self, p: &[f64], warm: &[f64], opts: SolverOptions) -> Result<Vec<f64>> {
        Ok(route_toll_equilibrium(self, p, Some(warm), fw(opts))?.route_flow)
    }

    fn social_optimum(&self, opts: SolverOptions) -> Result<Vec<f64>> {
        Ok(system_optimum_with(self, None, fw(opts))?.route_flow)
    }
}

/// Routing with edge tolls: strategies are route flows, incentives are edge
/// tolls and the externality is `w_a l'_a(w_a)` per edge.
#[derive(Debug, Clone)]
pub struct EdgeTollSystem {
    net: RoutingNetwork,
}

impl EdgeTollSystem {
    pub fn new(net: RoutingNetwork) -> Self {
        EdgeTollSystem { net }
    }

    pub fn network(&self) -> &RoutingNetwork {
        &self.net
    }

    fn natural_residual(&self, x: &[f64], costs: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(costs).map(|(a, c)| a - c).collect();
        vecops::dist_inf(x, &self.net.layout().project(&z))
    }
}

impl CoupledGame for EdgeTollSystem {
    fn strategy_dim(&self) -> usize {
        self.net.n_routes()
    }

    fn incentive_dim(&self) -> usize {
        self.net.n_edges()
    }

    fn population_layout(&self) -> Option<&PopulationLayout> {
        Some(self.net.layout())
    }

    fn check_strategy(&self, x: &[f64]) -> Result<()> {
        self.net.layout().check_feasible(x, MASS_TOL)
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        self.net.layout().project(v)
    }

    fn equilibrium(&self, p: &[f64], warm: &[f64], tol: f64) -> Result<Vec<f64>> {
        Ok(wardrop_equilibrium_with(&self.net, p, Some(warm), FwOptions::with_tol(tol))?.route_flow)
    }

    fn best_response(&self, x: &[f64], p: &[f64], _tol: f64) -> Result<Vec<f64>> {
        let c = self.net.route_costs(x, p)?;
        Ok(best_response_nonatomic(self.net.layout(), &c))
    }

    fn cost_operator(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.net.route_costs(x, p)
    }

    fn externality(&self, x: &[f64]) -> Result<Vec<f64>> {
        edge_externality(&self.net, &self.net.route_to_edge_flow(x)?)
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        Ok(self.net.edge_social_cost(&self.net.route_to_edge_flow(x)?))
    }

    fn social_optimum(&self, tol: f64) -> Result<Vec<f64>> {
        Ok(system_optimum_with(&self.net, None, FwOptions::with_tol(tol))?.route_flow)
    }

    fn optimality_residual(&self, x: &[f64]) -> Result<f64> {
        let g = NonAtomicGame::social_cost_gradient(&self.net, x)?;
        Ok(self.natural_residual(x, &g))
    }

    fn nash_residual(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        let c = self.net.route_costs(x, p)?;
        Ok(self.natural_residual(x, &c))
    }

    fn outcome(&self, x: &[f64]) -> Vec<f64> {
        self.net.edge_flow_unchecked(x)
    }

    fn random_strategy(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.net.layout().random(rng)
    }

    fn default_strategy(&self) -> Vec<f64> {
        self.net.layout().uniform()
    }

    fn cost_lipschitz(&self, x: &[f64]) -> Result<f64> {
        fd::lipschitz_estimate(|y| NonAtomicGame::action_costs(&self.net, y), x)
    }
}

/// Coupled route-choice / edge-toll iteration `p_{a,k+1} = (1 − β_k) p_{a,k} + β_k w_{a,k} l'_a(w_{a,k})`.
pub fn run_toll_adaptation(
    net: &RoutingNetwork,
    x0: &[f64],
    p0: &[f64],
    config: &RunConfig,
) -> Result<TrajectoryRecord> {
    run_coupled(&EdgeTollSystem::new(net.clone()), x0, p0, config)
}
