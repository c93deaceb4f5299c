use std::io::Write;

use serde::{Deserialize, Serialize};

use super::baseline::{GradientBaseline, GradientEstimator};
use crate::dynamics::{run_coupled, run_with_target, RunConfig, TrajectoryRecord};
use crate::par::Execution;
use crate::routing::{self, EdgeTollSystem};
use crate::{vecops, Error, Result};

/// Settings for the two-link counterexample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleOptions {
    /// Grid points per axis of the toll grid over `[−range, range]²`.
    pub grid_size: usize,
    pub range: f64,
    /// Tolerance for the equilibrium and cost formulas on the grid.
    pub grid_tol: f64,
    /// Tolerance on the final toll and social cost of the runs.
    pub run_tol: f64,
    /// Starts for the baseline and externality runs; each should have
    /// `|p₁ − p₂| ≥ 1`.
    pub starts: Vec<[f64; 2]>,
    pub run: RunConfig,
    pub execution: Execution,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions {
            grid_size: 41,
            range: 2.0,
            grid_tol: 1e-6,
            run_tol: 1e-3,
            starts: vec![[1.5, 0.0], [0.0, 2.0], [-1.0, 1.0]],
            run: RunConfig {
                convergence_tol: 1e-7,
                ..RunConfig::default()
            },
            execution: Execution::default(),
        }
    }
}

/// `x₁*(p) = Proj_[0,1]((p₂ − p₁ + 1)/2)`.
pub fn two_link_equilibrium_share(p: [f64; 2]) -> f64 {
    ((p[1] - p[0] + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// `((p₁ − p₂)² + 1)/2` for `|p₁ − p₂| ≤ 1`, else 1.
pub fn two_link_equilibrium_cost(p: [f64; 2]) -> f64 {
    let d = p[0] - p[1];
    if d.abs() <= 1.0 {
        (d * d + 1.0) / 2.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub toll: [f64; 2],
    pub solver_share: f64,
    pub formula_share: f64,
    pub solver_cost: f64,
    pub formula_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub start: [f64; 2],
    pub final_p: Vec<f64>,
    pub final_social_cost: f64,
    pub converged: bool,
    pub iterations: u64,
}

impl RunOutcome {
    fn from_result(start: [f64; 2], res: Result<TrajectoryRecord>) -> Result<Self> {
        let rec = match res {
            Ok(rec) => rec,
            Err(Error::NotConverged(rec)) => *rec,
            Err(e) => return Err(e),
        };
        Ok(RunOutcome {
            start,
            final_p: rec.final_p().to_vec(),
            final_social_cost: rec.final_social_cost(),
            converged: rec.converged,
            iterations: rec.iterations_used,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub passed: bool,
    pub detail: String,
}

impl SubCheck {
    fn new(passed: bool, detail: String) -> Self {
        SubCheck { passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    /// Solver equilibrium agrees with the projection formula on the grid.
    pub equilibrium_formula: SubCheck,
    /// Equilibrium social cost agrees with its closed form on the grid.
    pub cost_formula: SubCheck,
    /// Gradient baseline stays at an inefficient fixed point.
    pub baseline_stuck: SubCheck,
    /// Externality updates reach the optimal toll.
    pub externality_recovers: SubCheck,
    pub max_share_error: f64,
    pub max_cost_error: f64,
    pub baseline_runs: Vec<RunOutcome>,
    pub externality_runs: Vec<RunOutcome>,
    #[serde(skip)]
    pub grid: Vec<GridPoint>,
    pub passed: bool,
}

impl CounterexampleReport {
    /// Toll grid with solver and closed-form equilibria, for plotting.
    pub fn write_grid_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "p1,p2,solver_share,formula_share,solver_cost,formula_cost")?;
        for g in &self.grid {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                g.toll[0], g.toll[1], g.solver_share, g.formula_share, g.solver_cost, g.formula_cost
            )?;
        }
        Ok(())
    }
}

/// Solver equilibria on the toll grid.
pub fn two_link_grid(options: &CounterexampleOptions) -> Result<Vec<GridPoint>> {
    if options.grid_size < 2 || !(options.range > 0.0) {
        return Err(Error::invalid_argument("toll grid needs at least two points per axis and a positive range"));
    }
    let system = EdgeTollSystem::new(routing::two_link());
    let n = options.grid_size;
    let coord = |i: usize| -options.range + 2.0 * options.range * i as f64 / (n - 1) as f64;
    let tol = options.grid_tol * options.grid_tol;
    options
        .execution
        .map_range(n * n, |idx| {
            let toll = [coord(idx / n), coord(idx % n)];
            let sol = routing::wardrop_equilibrium(system.network(), &toll, tol)?;
            Ok(GridPoint {
                toll,
                solver_share: sol.route_flow[0],
                formula_share: two_link_equilibrium_share(toll),
                solver_cost: system.network().edge_social_cost(&sol.edge_flow),
                formula_cost: two_link_equilibrium_cost(toll),
            })
        })
        .into_iter()
        .collect()
}

/// Reproduces the two-link counterexample: the equilibrium map and
/// equilibrium social cost match their closed forms, gradient descent on the
/// equilibrium cost stalls at inefficient tolls, and externality updates from
/// the same starts recover the optimal tolls `(0.5, 0.5)`.
pub fn reproduce_counterexample(options: &CounterexampleOptions) -> Result<CounterexampleReport> {
    options.run.validate()?;
    let grid = two_link_grid(options)?;
    let worst = |err: fn(&GridPoint) -> f64| {
        grid.iter()
            .map(|g| (err(g), g.toll))
            .fold((0.0, [0.0, 0.0]), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (max_share_error, share_at) = worst(|g| (g.solver_share - g.formula_share).abs());
    let (max_cost_error, cost_at) = worst(|g| (g.solver_cost - g.formula_cost).abs());

    let system = EdgeTollSystem::new(routing::two_link());
    let x0 = [0.5, 0.5];
    let baseline = GradientBaseline {
        estimator: GradientEstimator::TwoLink,
    };
    let baseline_runs = options
        .execution
        .map(&options.starts, |s| {
            RunOutcome::from_result(*s, run_with_target(&system, &x0, s, &options.run, &baseline))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let externality_runs = options
        .execution
        .map(&options.starts, |s| RunOutcome::from_result(*s, run_coupled(&system, &x0, s, &options.run)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let tol = options.run_tol;
    let stuck = |r: &RunOutcome| {
        r.converged && (r.final_p[0] - r.final_p[1]).abs() >= 1.0 && (r.final_social_cost - 1.0).abs() <= tol
    };
    let recovered = |r: &RunOutcome| {
        r.converged && vecops::dist_inf(&r.final_p, &[0.5, 0.5]) <= tol && (r.final_social_cost - 0.5).abs() <= tol
    };
    let describe = |runs: &[RunOutcome], ok: &dyn Fn(&RunOutcome) -> bool| -> String {
        match runs.iter().find(|r| !ok(r)) {
            None => format!("all {} runs as expected", runs.len()),
            Some(r) => format!(
                "start {:?}: final tolls {:?}, social cost {:.6}, converged {}",
                r.start, r.final_p, r.final_social_cost, r.converged
            ),
        }
    };

    let equilibrium_formula = SubCheck::new(
        max_share_error <= options.grid_tol,
        format!("max share error {max_share_error:.3e} at tolls {share_at:?}"),
    );
    let cost_formula = SubCheck::new(
        max_cost_error <= options.grid_tol,
        format!("max cost error {max_cost_error:.3e} at tolls {cost_at:?}"),
    );
    let baseline_stuck = SubCheck::new(baseline_runs.iter().all(stuck), describe(&baseline_runs, &stuck));
    let externality_recovers = SubCheck::new(
        externality_runs.iter().all(recovered),
        describe(&externality_runs, &recovered),
    );
    let passed = equilibrium_formula.passed && cost_formula.passed && baseline_stuck.passed && externality_recovers.passed;
    Ok(CounterexampleReport {
        equilibrium_formula,
        cost_formula,
        baseline_stuck,
        externality_recovers,
        max_share_error,
        max_cost_error,
        baseline_runs,
        externality_runs,
        grid,
        passed,
    })
}
