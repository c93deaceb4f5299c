//! Flow assignment: tolled Wardrop equilibria and the system optimum.

use super::frank_wolfe::{FlowProgram, FlowSolution, FwOptions};
use super::RoutingNetwork;
use crate::game::MASS_TOL;
use crate::Result;

fn start_point(net: &RoutingNetwork, start: Option<&[f64]>) -> Vec<f64> {
    match start {
        Some(x) if net.layout().is_feasible(x, MASS_TOL) => net.layout().project(x),
        _ => net.layout().uniform(),
    }
}

/// Wardrop equilibrium under edge tolls: minimises the Beckmann potential
/// from the uniform route split until the relative duality gap is `≤ tol`.
pub fn wardrop_equilibrium(net: &RoutingNetwork, edge_tolls: &[f64], tol: f64) -> Result<FlowSolution> {
    wardrop_equilibrium_with(net, edge_tolls, None, FwOptions::with_tol(tol))
}

/// [`wardrop_equilibrium`] from a chosen feasible start (ignored if infeasible).
pub fn wardrop_equilibrium_with(
    net: &RoutingNetwork,
    edge_tolls: &[f64],
    start: Option<&[f64]>,
    opts: FwOptions,
) -> Result<FlowSolution> {
    net.check_tolls(edge_tolls)?;
    FlowProgram {
        net,
        edge_cost: |a: usize, w: f64| net.edges()[a].latency.value(w) + edge_tolls[a],
        route_extra: None,
    }
    .solve(start_point(net, start), opts)
}

/// Wardrop equilibrium under arbitrary per-route tolls.
pub fn route_toll_equilibrium(
    net: &RoutingNetwork,
    route_tolls: &[f64],
    start: Option<&[f64]>,
    opts: FwOptions,
) -> Result<FlowSolution> {
    if route_tolls.len() != net.n_routes() {
        return Err(crate::Error::invalid_argument(format!(
            "route toll vector has length {}, expected {}",
            route_tolls.len(),
            net.n_routes()
        )));
    }
    FlowProgram {
        net,
        edge_cost: |a: usize, w: f64| net.edges()[a].latency.value(w),
        route_extra: Some(route_tolls),
    }
    .solve(start_point(net, start), opts)
}

/// Minimises `Σ_a w_a l_a(w_a)` with marginal edge costs `l_a + w_a l'_a`.
pub fn system_optimum(net: &RoutingNetwork, tol: f64) -> Result<FlowSolution> {
    system_optimum_with(net, None, FwOptions::with_tol(tol))
}

pub fn system_optimum_with(net: &RoutingNetwork, start: Option<&[f64]>, opts: FwOptions) -> Result<FlowSolution> {
    FlowProgram {
        net,
        edge_cost: |a: usize, w: f64| net.edges()[a].latency.marginal(w),
        route_extra: None,
    }
    .solve(start_point(net, start), opts)
}
