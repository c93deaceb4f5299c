//! Non-atomic routing on directed networks with edge tolls.
//!
//! Route flows are the strategy distribution (one population per OD pair,
//! one action per enumerated route). Equilibria and the system optimum are
//! computed by Frank-Wolfe on the corresponding convex flow programs.

mod assign;
pub mod fixtures;
mod frank_wolfe;
mod latency;
mod network;
mod system;
mod tolls;

pub use assign::{
    route_toll_equilibrium, system_optimum, system_optimum_with, wardrop_equilibrium, wardrop_equilibrium_with,
};
pub use fixtures::{braess, fixture, pigou, two_link, FIXTURES};
pub use frank_wolfe::{FlowSolution, FwOptions, FwVariant};
pub use latency::Latency;
pub use network::{
    enumerate_simple_paths, Edge, EdgeSpec, NetworkSpec, NodeKey, OdSpec, RoutingNetwork, MAX_ENUMERATION_NODES,
};
pub use system::{run_toll_adaptation, EdgeTollSystem};
pub use tolls::{
    delta_entry, delta_matrix, edge_externality, flow_monotonicity_check, nondegeneracy_check, optimal_edge_tolls,
    NondegeneracyReport, OptimalTolls, Verdict,
};
