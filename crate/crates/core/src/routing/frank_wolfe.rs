use serde::{Deserialize, Serialize};

use super::RoutingNetwork;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwVariant {
    /// Per OD pair, shift flow from the costliest used route to the cheapest.
    #[default]
    Pairwise,
    /// All-or-nothing direction for every OD pair at once.
    Classic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwOptions {
    /// Target relative duality gap.
    pub tol: f64,
    pub max_iterations: usize,
    pub variant: FwVariant,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions {
            tol: 1e-9,
            max_iterations: 200_000,
            variant: FwVariant::Pairwise,
        }
    }
}

impl FwOptions {
    pub fn with_tol(tol: f64) -> Self {
        FwOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub route_flow: Vec<f64>,
    pub edge_flow: Vec<f64>,
    /// `Σ_r x_r (C_r − min C) / max(|Σ_r x_r C_r|, 1)` at the returned point.
    pub relative_gap: f64,
    pub iterations: usize,
}

/// A convex separable flow program: per-edge cost derivative `c_a(w_a)` plus
/// optional fixed per-route costs. Wardrop equilibria and the system optimum
/// are both instances.
pub(crate) struct FlowProgram<'a, C: Fn(usize, f64) -> f64> {
    pub net: &'a RoutingNetwork,
    pub edge_cost: C,
    pub route_extra: Option<&'a [f64]>,
}

impl<C: Fn(usize, f64) -> f64> FlowProgram<'_, C> {
    fn route_cost(&self, r: usize, w: &[f64]) -> f64 {
        let base: f64 = self.net.routes()[r].iter().map(|a| (self.edge_cost)(*a, w[*a])).sum();
        base + self.route_extra.map_or(0.0, |e| e[r])
    }

    fn route_costs(&self, w: &[f64]) -> Vec<f64> {
        (0..self.net.n_routes()).map(|r| self.route_cost(r, w)).collect()
    }

    fn relative_gap(&self, x: &[f64], costs: &[f64]) -> f64 {
        let layout = self.net.layout();
        let mut gap = 0.0;
        let mut total = 0.0;
        for i in 0..layout.n_populations() {
            let block = layout.block(i);
            let min = costs[block.clone()].iter().copied().fold(f64::INFINITY, f64::min);
            for r in block {
                gap += x[r] * (costs[r] - min);
                total += x[r] * costs[r];
            }
        }
        gap / total.abs().max(1.0)
    }

    /// Derivative of the objective along edge direction `d` at step `t`.
    fn slope(&self, w: &[f64], d: &[(usize, f64)], extra: f64, t: f64) -> f64 {
        d.iter()
            .map(|(a, da)| da * (self.edge_cost)(*a, w[*a] + t * da))
            .sum::<f64>()
            + extra
    }

    /// Exact line search on `[0, t_max]` for a convex objective: bisection on
    /// the nondecreasing slope.
    fn line_search(&self, w: &[f64], d: &[(usize, f64)], extra: f64, t_max: f64) -> f64 {
        if self.slope(w, d, extra, 0.0) >= 0.0 {
            return 0.0;
        }
        if self.slope(w, d, extra, t_max) <= 0.0 {
            return t_max;
        }
        let (mut lo, mut hi) = (0.0, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(w, d, extra, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn solve(&self, start: Vec<f64>, opts: FwOptions) -> Result<FlowSolution> {
        let net = self.net;
        let mut x = start;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for it in 0..=opts.max_iterations {
            let w = net.edge_flow_unchecked(&x);
            let costs = self.route_costs(&w);
            if costs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Evaluation("route cost is not finite".into()));
            }
            let gap = self.relative_gap(&x, &costs);
            if gap <= opts.tol {
                return Ok(FlowSolution {
                    edge_flow: w,
                    route_flow: x,
                    relative_gap: gap,
                    iterations: it,
                });
            }
            if best.as_ref().is_none_or(|(g, _)| gap < *g) {
                best = Some((gap, x.clone()));
            }
            if it == opts.max_iterations {
                break;
            }
            match opts.variant {
                FwVariant::Pairwise => self.pairwise_sweep(&mut x),
                FwVariant::Classic => self.classic_step(&mut x, &w, &costs),
            }
        }
        let (gap, x) = best.expect("at least one iterate was evaluated");
        Err(Error::ConvergenceFailure {
            context: "flow assignment (Frank-Wolfe)".into(),
            iterations: opts.max_iterations,
            residual: gap,
            best: x,
        })
    }

    fn pairwise_sweep(&self, x: &mut [f64]) {
        let net = self.net;
        let layout = net.layout();
        let mut w = net.edge_flow_unchecked(x);
        for i in 0..layout.n_populations() {
            let block = layout.block(i);
            let costs: Vec<(usize, f64)> = block.clone().map(|r| (r, self.route_cost(r, &w))).collect();
            let (s, cs) = costs
                .iter()
                .copied()
                .fold((usize::MAX, f64::INFINITY), |acc, (r, c)| if c < acc.1 { (r, c) } else { acc });
            let Some((v, cv)) = costs
                .iter()
                .copied()
                .filter(|(r, _)| x[*r] > 0.0)
                .fold(None, |acc: Option<(usize, f64)>, (r, c)| match acc {
                    Some((_, bc)) if bc >= c => acc,
                    _ => Some((r, c)),
                })
            else {
                continue;
            };
            if v == s || cv <= cs {
                continue;
            }
            let mut d: Vec<(usize, f64)> = Vec::new();
            for (route, sign) in [(s, 1.0), (v, -1.0)] {
                for a in &net.routes()[route] {
                    match d.iter_mut().find(|(b, _)| b == a) {
                        Some(entry) => entry.1 += sign,
                        None => d.push((*a, sign)),
                    }
                }
            }
            d.retain(|(_, da)| *da != 0.0);
            let extra = self.route_extra.map_or(0.0, |e| e[s] - e[v]);
            let t = self.line_search(&w, &d, extra, x[v]);
            if t <= 0.0 {
                continue;
            }
            if t >= x[v] {
                x[s] += x[v];
                x[v] = 0.0;
            } else {
                x[s] += t;
                x[v] -= t;
            }
            for (a, da) in &d {
                w[*a] += t * da;
            }
        }
    }

    fn classic_step(&self, x: &mut [f64], w: &[f64], costs: &[f64]) {
        let net = self.net;
        let layout = net.layout();
        let mut target = vec![0.0; x.len()];
        for i in 0..layout.n_populations() {
            let block = layout.block(i);
            let mut s = block.start;
            for r in block {
                if costs[r] < costs[s] {
                    s = r;
                }
            }
            target[s] = layout.mass(i);
        }
        let wy = net.edge_flow_unchecked(&target);
        let d: Vec<(usize, f64)> = wy
            .iter()
            .zip(w)
            .enumerate()
            .map(|(a, (y, w))| (a, y - w))
            .filter(|(_, da)| *da != 0.0)
            .collect();
        let extra = self
            .route_extra
            .map_or(0.0, |e| e.iter().zip(&target).zip(x.iter()).map(|((e, y), x)| e * (y - x)).sum());
        let t = self.line_search(w, &d, extra, 1.0);
        for (xi, yi) in x.iter_mut().zip(&target) {
            *xi = if t == 1.0 { *yi } else { *xi + t * (yi - *xi) };
        }
    }
}
