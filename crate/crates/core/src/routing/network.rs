use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Latency;
use crate::game::{PopulationLayout, MASS_TOL};
use crate::{Error, Result};

/// Node label in network JSON: a number or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeKey {
    Index(i64),
    Name(String),
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKey::Index(i) => write!(f, "{i}"),
            NodeKey::Name(s) => f.write_str(s),
        }
    }
}

impl From<&str> for NodeKey {
    fn from(s: &str) -> Self {
        NodeKey::Name(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub tail: NodeKey,
    pub head: NodeKey,
    pub poly: Latency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdSpec {
    pub o: NodeKey,
    pub d: NodeKey,
    pub demand: f64,
    pub routes: Vec<Vec<usize>>,
}

/// Wire format of a [`RoutingNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeKey>,
    pub edges: Vec<EdgeSpec>,
    pub od: Vec<OdSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub latency: Latency,
}

/// A validated network with enumerated routes. Route flows are laid out OD
/// pair by OD pair, so a route flow is a point of [`RoutingNetwork::layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingNetwork {
    spec: NetworkSpec,
    edges: Vec<Edge>,
    routes: Vec<Vec<usize>>,
    route_od: Vec<usize>,
    layout: PopulationLayout,
}

impl TryFrom<NetworkSpec> for RoutingNetwork {
    type Error = Error;
    fn try_from(spec: NetworkSpec) -> Result<Self> {
        RoutingNetwork::new(spec)
    }
}

impl From<RoutingNetwork> for NetworkSpec {
    fn from(n: RoutingNetwork) -> Self {
        n.spec
    }
}

impl Serialize for RoutingNetwork {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RoutingNetwork {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RoutingNetwork::new(NetworkSpec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl RoutingNetwork {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, n) in spec.nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::invalid_spec(format!("duplicate node {n}")));
            }
        }
        let lookup = |k: &NodeKey| {
            index
                .get(k)
                .copied()
                .ok_or_else(|| Error::invalid_spec(format!("unknown node {k}")))
        };
        let edges = spec
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    tail: lookup(&e.tail)?,
                    head: lookup(&e.head)?,
                    latency: e.poly.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if spec.od.is_empty() {
            return Err(Error::invalid_spec("a network needs at least one OD pair"));
        }
        let mut routes = Vec::new();
        let mut route_od = Vec::new();
        let mut populations = Vec::new();
        for (i, od) in spec.od.iter().enumerate() {
            let (o, d) = (lookup(&od.o)?, lookup(&od.d)?);
            if !(od.demand > 0.0 && od.demand.is_finite()) {
                return Err(Error::invalid_spec(format!("OD pair {i} has non-positive demand {}", od.demand)));
            }
            if od.routes.is_empty() {
                return Err(Error::invalid_spec(format!("OD pair {i} has no routes")));
            }
            for (j, route) in od.routes.iter().enumerate() {
                check_path(&edges, route, o, d).map_err(|m| {
                    Error::invalid_spec(format!("route {j} of OD pair {i} {m}"))
                })?;
                routes.push(route.clone());
                route_od.push(i);
            }
            populations.push((od.demand, od.routes.len()));
        }
        Ok(RoutingNetwork {
            layout: PopulationLayout::new(&populations)?,
            spec,
            edges,
            routes,
            route_od,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn n_nodes(&self) -> usize {
        self.spec.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn n_routes(&self) -> usize {
        self.routes.len()
    }

    /// OD pair serving each route.
    pub fn route_od(&self) -> &[usize] {
        &self.route_od
    }

    pub fn layout(&self) -> &PopulationLayout {
        &self.layout
    }

    pub fn total_demand(&self) -> f64 {
        self.layout.masses().iter().sum()
    }

    /// Edges whose latency is not strictly increasing.
    pub fn non_strict_edges(&self) -> Vec<usize> {
        (0..self.n_edges())
            .filter(|a| !self.edges[*a].latency.is_strictly_increasing())
            .collect()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.non_strict_edges().is_empty()
    }

    fn check_route_flow(&self, x: &[f64]) -> Result<()> {
        self.layout.check_feasible(x, MASS_TOL)
    }

    /// `w_a = Σ_r x_r 1(a ∈ r)`.
    pub fn route_to_edge_flow(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_route_flow(x)?;
        Ok(self.edge_flow_unchecked(x))
    }

    pub(crate) fn edge_flow_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_edges()];
        for (r, route) in self.routes.iter().enumerate() {
            for a in route {
                w[*a] += x[r];
            }
        }
        w
    }

    /// Sums per-edge quantities along each route.
    pub fn route_sums(&self, per_edge: &[f64]) -> Vec<f64> {
        self.routes
            .iter()
            .map(|route| route.iter().map(|a| per_edge[*a]).sum())
            .collect()
    }

    pub fn edge_latencies(&self, w: &[f64]) -> Vec<f64> {
        self.edges.iter().zip(w).map(|(e, w)| e.latency.value(*w)).collect()
    }

    /// Route tolls `Σ_{a∈r} p_a` induced by edge tolls.
    pub fn route_tolls(&self, edge_tolls: &[f64]) -> Result<Vec<f64>> {
        self.check_tolls(edge_tolls)?;
        Ok(self.route_sums(edge_tolls))
    }

    pub(crate) fn check_tolls(&self, tolls: &[f64]) -> Result<()> {
        if tolls.len() != self.n_edges() {
            return Err(Error::invalid_argument(format!(
                "toll vector has length {}, expected {}",
                tolls.len(),
                self.n_edges()
            )));
        }
        if tolls.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_argument("tolls must be finite"));
        }
        Ok(())
    }

    /// Route costs `Σ_{a∈r} (l_a(w_a) + p_a)` at route flow `x`.
    pub fn route_costs(&self, x: &[f64], edge_tolls: &[f64]) -> Result<Vec<f64>> {
        self.check_tolls(edge_tolls)?;
        let w = self.route_to_edge_flow(x)?;
        let c: Vec<f64> = self
            .edge_latencies(&w)
            .iter()
            .zip(edge_tolls)
            .map(|(l, p)| l + p)
            .collect();
        Ok(self.route_sums(&c))
    }

    /// Social cost `Σ_a w_a l_a(w_a)`.
    pub fn edge_social_cost(&self, w: &[f64]) -> f64 {
        self.edges.iter().zip(w).map(|(e, w)| w * e.latency.value(*w)).sum()
    }

    /// Beckmann potential `Σ_a ∫₀^{w_a} l_a + Σ_a p_a w_a`.
    pub fn beckmann(&self, w: &[f64], edge_tolls: &[f64]) -> f64 {
        self.edges
            .iter()
            .zip(w)
            .zip(edge_tolls)
            .map(|((e, w), p)| e.latency.integral(*w) + p * w)
            .sum()
    }

    /// Edge-by-route incidence stacked on the OD membership rows; full column
    /// rank means edge flows determine route flows.
    pub(crate) fn route_flow_identifiable(&self) -> bool {
        let rows = self.n_edges() + self.layout.n_populations();
        let m = nalgebra::DMatrix::from_fn(rows, self.n_routes(), |i, r| {
            if i < self.n_edges() {
                if self.routes[r].contains(&i) {
                    1.0
                } else {
                    0.0
                }
            } else if self.route_od[r] == i - self.n_edges() {
                1.0
            } else {
                0.0
            }
        });
        m.rank(1e-9) == self.n_routes()
    }
}

fn check_path(edges: &[Edge], route: &[usize], origin: usize, destination: usize) -> std::result::Result<(), String> {
    let first = route.first().ok_or("is empty")?;
    let mut at = edges.get(*first).ok_or(format!("uses unknown edge {first}"))?.tail;
    if at != origin {
        return Err("does not start at its origin".into());
    }
    let mut seen = vec![false; edges.len()];
    for a in route {
        let e = edges.get(*a).ok_or(format!("uses unknown edge {a}"))?;
        if e.tail != at {
            return Err(format!("is not contiguous at edge {a}"));
        }
        if std::mem::replace(&mut seen[*a], true) {
            return Err(format!("repeats edge {a}"));
        }
        at = e.head;
    }
    if at != destination {
        return Err("does not end at its destination".into());
    }
    Ok(())
}

/// All simple paths from `origin` to `destination`, as edge-index sequences,
/// in depth-first order. Limited to networks with at most
/// [`MAX_ENUMERATION_NODES`] nodes.
pub fn enumerate_simple_paths(
    n_nodes: usize,
    edges: &[(usize, usize)],
    origin: usize,
    destination: usize,
) -> Result<Vec<Vec<usize>>> {
    if n_nodes > MAX_ENUMERATION_NODES {
        return Err(Error::invalid_argument(format!(
            "path enumeration is limited to {MAX_ENUMERATION_NODES} nodes, got {n_nodes}"
        )));
    }
    if origin >= n_nodes || destination >= n_nodes || edges.iter().any(|(t, h)| *t >= n_nodes || *h >= n_nodes) {
        return Err(Error::invalid_argument("edge or endpoint refers to a missing node"));
    }
    fn dfs(
        edges: &[(usize, usize)],
        at: usize,
        destination: usize,
        visited: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == destination {
            out.push(path.clone());
            return;
        }
        for (a, (t, h)) in edges.iter().enumerate() {
            if *t == at && !visited[*h] {
                visited[*h] = true;
                path.push(a);
                dfs(edges, *h, destination, visited, path, out);
                path.pop();
                visited[*h] = false;
            }
        }
    }
    let mut visited = vec![false; n_nodes];
    visited[origin] = true;
    let mut out = Vec::new();
    dfs(edges, origin, destination, &mut visited, &mut Vec::new(), &mut out);
    Ok(out)
}

pub const MAX_ENUMERATION_NODES: usize = 12;
