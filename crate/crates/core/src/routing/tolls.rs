//! Marginal-cost tolls and the checks around them.

use serde::Serialize;

use super::assign::{system_optimum, wardrop_equilibrium, wardrop_equilibrium_with};
use super::frank_wolfe::{FlowSolution, FwOptions};
use super::{Latency, RoutingNetwork};
use crate::{vecops, Error, Result};

fn check_edge_flow(net: &RoutingNetwork, w: &[f64]) -> Result<()> {
    if w.len() != net.n_edges() {
        return Err(Error::invalid_argument(format!(
            "edge flow has length {}, expected {}",
            w.len(),
            net.n_edges()
        )));
    }
    if let Some(v) = w.iter().find(|v| !(**v >= -1e-12 && v.is_finite())) {
        return Err(Error::invalid_argument(format!("edge flow entry {v} is negative or not finite")));
    }
    Ok(())
}

/// Per-edge externality `w_a l'_a(w_a)`.
pub fn edge_externality(net: &RoutingNetwork, w: &[f64]) -> Result<Vec<f64>> {
    check_edge_flow(net, w)?;
    Ok(net.edges().iter().zip(w).map(|(e, w)| e.latency.externality(*w)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalTolls {
    /// `p†_a = w†_a l'_a(w†_a)`.
    pub tolls: Vec<f64>,
    pub optimum: FlowSolution,
    /// Wardrop equilibrium under `tolls`.
    pub tolled: FlowSolution,
    /// `‖w*(p†) − w†‖∞`.
    pub flow_error: f64,
}

/// Marginal-cost tolls at the system optimum, verified by re-solving the
/// tolled equilibrium. A tolled edge flow further than `10·tol` from the
/// optimum is reported as an [`Error::Inconsistency`].
pub fn optimal_edge_tolls(net: &RoutingNetwork, tol: f64) -> Result<OptimalTolls> {
    let optimum = system_optimum(net, tol)?;
    let tolls = edge_externality(net, &optimum.edge_flow)?;
    let tolled = wardrop_equilibrium_with(net, &tolls, Some(&optimum.route_flow), FwOptions::with_tol(tol))?;
    let flow_error = vecops::dist_inf(&tolled.edge_flow, &optimum.edge_flow);
    if flow_error > 10.0 * tol {
        return Err(Error::Inconsistency(format!(
            "equilibrium under marginal-cost tolls is {flow_error:.3e} away from the system optimum"
        )));
    }
    Ok(OptimalTolls {
        tolls,
        optimum,
        tolled,
        flow_error,
    })
}

/// `1 / (l'(w) + w l''(w))`, the inverse slope of the marginal externality.
pub fn delta_entry(latency: &Latency, w: f64) -> Result<f64> {
    let denom = latency.derivative(w) + w * latency.second_derivative(w);
    if denom > 0.0 {
        Ok(1.0 / denom)
    } else {
        Err(Error::invalid_spec(format!(
            "l' + w l'' = {denom} at w = {w}; latencies must be strictly increasing"
        )))
    }
}

/// Diagonal of `Δ` with `Δ_aa = 1 / (l'_a(w_a) + w_a l''_a(w_a))` at the
/// optimal edge flow.
pub fn delta_matrix(net: &RoutingNetwork, optimal_edge_flow: &[f64]) -> Result<Vec<f64>> {
    check_edge_flow(net, optimal_edge_flow)?;
    net.edges()
        .iter()
        .zip(optimal_edge_flow)
        .enumerate()
        .map(|(a, (e, w))| {
            delta_entry(&e.latency, *w).map_err(|err| match err {
                Error::InvalidSpec(m) => Error::invalid_spec(format!("edge {a}: {m}")),
                other => other,
            })
        })
        .collect()
}

/// `Σ_a (p_a − p'_a)(w*_a(p) − w*_a(p'))`; never positive when equilibrium
/// flows respond monotonically to tolls.
pub fn flow_monotonicity_check(net: &RoutingNetwork, p: &[f64], q: &[f64], tol: f64) -> Result<f64> {
    let w = wardrop_equilibrium(net, p, tol)?.edge_flow;
    let v = wardrop_equilibrium(net, q, tol)?.edge_flow;
    Ok((0..net.n_edges()).map(|a| (p[a] - q[a]) * (w[a] - v[a])).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub verdict: Verdict,
    /// Routes whose cost is within `tol` of their OD minimum.
    pub min_cost_routes: Vec<usize>,
    /// Smallest flow on a min-cost route in the best witness found.
    pub min_flow_on_min_cost_routes: f64,
    /// Route flow with positive mass on every min-cost route, if one was found.
    pub witness: Option<Vec<f64>>,
    pub route_flow_unique: bool,
}

/// Checks that some equilibrium under `tolls` routes positive flow over every
/// minimum-cost route. Tries the solver's own answer, then a re-solve
/// warm-started from an even split over the minimum-cost routes. If neither
/// works, the verdict is `Fail` only when the route flow is provably unique and
/// a minimum-cost route is both exactly tied and (numerically) empty.
pub fn nondegeneracy_check(net: &RoutingNetwork, tolls: &[f64], tol: f64) -> Result<NondegeneracyReport> {
    let inner = FwOptions::with_tol((tol * 1e-3).max(1e-14));
    let first = wardrop_equilibrium_with(net, tolls, None, inner)?;
    let layout = net.layout();
    let min_cost_set = |x: &[f64]| -> Result<(Vec<usize>, Vec<f64>)> {
        let c = net.route_costs(x, tolls)?;
        let mut set = Vec::new();
        let mut gaps = vec![0.0; c.len()];
        for i in 0..layout.n_populations() {
            let block = layout.block(i);
            let min = c[block.clone()].iter().copied().fold(f64::INFINITY, f64::min);
            for r in block {
                gaps[r] = c[r] - min;
                if gaps[r] <= tol {
                    set.push(r);
                }
            }
        }
        Ok((set, gaps))
    };
    let min_flow = |x: &[f64], set: &[usize]| set.iter().map(|r| x[*r]).fold(f64::INFINITY, f64::min);

    let (set, _) = min_cost_set(&first.route_flow)?;
    let mut best = (min_flow(&first.route_flow, &set), first.route_flow.clone());
    let route_flow_unique = net.route_flow_identifiable() && net.is_strictly_increasing();
    if best.0 <= tol {
        let mut start = vec![0.0; net.n_routes()];
        for i in 0..layout.n_populations() {
            let members: Vec<usize> = layout.block(i).filter(|r| set.contains(r)).collect();
            for r in &members {
                start[*r] = layout.mass(i) / members.len() as f64;
            }
        }
        let second = wardrop_equilibrium_with(net, tolls, Some(&start), inner)?;
        let m = min_flow(&second.route_flow, &set);
        if m > best.0 {
            best = (m, second.route_flow);
        }
    }
    let (set, gaps) = min_cost_set(&best.1)?;
    let min_flow_now = min_flow(&best.1, &set);
    let verdict = if min_flow_now > tol {
        Verdict::Pass
    } else if route_flow_unique
        && set
            .iter()
            .any(|r| gaps[*r] <= 1e-3 * tol && best.1[*r] <= 1e-3 * tol)
    {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    };
    Ok(NondegeneracyReport {
        witness: (verdict == Verdict::Pass).then(|| best.1.clone()),
        verdict,
        min_cost_routes: set,
        min_flow_on_min_cost_routes: min_flow_now,
        route_flow_unique,
    })
}
