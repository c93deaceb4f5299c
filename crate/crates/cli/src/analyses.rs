use incentive_core::analysis::{
    check_cross_partial_condition, check_lyapunov_condition, multistart_uniqueness_probe,
    ode_probe_slow_dynamics, reproduce_counterexample, verify_fixed_point_optimality, OdeProbeConfig, QuadraticForm,
};
use incentive_core::dynamics::RunConfig;
use incentive_core::par::Execution;
use incentive_core::routing::{nondegeneracy_check, optimal_edge_tolls, Verdict};
use incentive_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{AnalysisSpec, SampleSpec};
use crate::game::Experiment;

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOutcome {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub report: Value,
    /// Extra files to write next to the report, as `(file name, contents)`.
    #[serde(skip)]
    pub attachments: Vec<(String, String)>,
}

/// Inputs shared by all analyses of one experiment.
pub struct AnalysisContext<'a> {
    pub experiment: &'a Experiment,
    pub run: &'a RunConfig,
    /// Final incentive of the coupled run, when there was one.
    pub final_incentive: Option<&'a [f64]>,
}

impl AnalysisContext<'_> {
    fn incentive_or_default(&self, given: &Option<Vec<f64>>, tol: f64) -> Result<Vec<f64>> {
        match (given, self.final_incentive) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(p)) => Ok(p.to_vec()),
            (None, None) => self.experiment.coupled().optimal_incentive(tol),
        }
    }
}

pub fn run_analysis(spec: &AnalysisSpec, ctx: &AnalysisContext<'_>) -> AnalysisOutcome {
    let mut attachments = Vec::new();
    match evaluate(spec, ctx, &mut attachments) {
        Ok((passed, report)) => AnalysisOutcome {
            name: spec.name(),
            passed,
            error: None,
            report,
            attachments,
        },
        Err(e) => AnalysisOutcome {
            name: spec.name(),
            passed: false,
            error: Some(e.to_string()),
            report: Value::Null,
            attachments,
        },
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn samples(spec: &SampleSpec, center: &[f64]) -> Vec<Vec<f64>> {
    if let Some(points) = &spec.points {
        return points.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|_| {
            center
                .iter()
                .map(|c| c + spec.scale * rng.gen_range(-1.0..=1.0))
                .collect()
        })
        .collect()
}

fn evaluate(
    spec: &AnalysisSpec,
    ctx: &AnalysisContext<'_>,
    attachments: &mut Vec<(String, String)>,
) -> Result<(bool, Value)> {
    let game = ctx.experiment.coupled();
    match spec {
        AnalysisSpec::VerifyFixedPoint { incentive, tol } => {
            let p = ctx.incentive_or_default(incentive, ctx.run.inner_tol)?;
            let r = verify_fixed_point_optimality(game, &p, *tol)?;
            Ok((r.passed, to_value(&r)))
        }
        AnalysisSpec::OdeProbe {
            step,
            horizon,
            start_points,
            inner_tol,
            radius,
        } => {
            let config = OdeProbeConfig {
                inner_tol: *inner_tol,
                ..OdeProbeConfig::new(*step, *horizon, start_points.clone())
            };
            let r = ode_probe_slow_dynamics(game, &config)?;
            Ok((r.all_within(*radius), to_value(&r)))
        }
        AnalysisSpec::CrossPartial { samples: s, tol } => {
            let center = game.optimal_incentive(*tol)?;
            let r = check_cross_partial_condition(game, &samples(s, &center), *tol)?;
            Ok((r.passed, to_value(&r)))
        }
        AnalysisSpec::Lyapunov { form, samples: s, tol } => {
            let form = match (form, ctx.experiment) {
                (Some(f), _) => f.clone(),
                (None, Experiment::Aggregative(g)) => QuadraticForm::aggregative(&g.0)?,
                (None, Experiment::Routing(g)) => QuadraticForm::routing(g.network(), *tol)?,
                (None, Experiment::Population(_)) => {
                    return Err(Error::InvalidArgument("lyapunov analysis of a population game needs an explicit form".into()))
                }
            };
            let r = check_lyapunov_condition(game, &form, &samples(s, &form.center), *tol)?;
            Ok((r.passed, json!({ "form": form, "report": r })))
        }
        AnalysisSpec::AggregativeConditions => {
            let g = ctx
                .experiment
                .aggregative()
                .ok_or_else(|| Error::InvalidArgument("aggregative_conditions needs an aggregative game".into()))?;
            let global = g.check_global_conditions();
            let local = g.check_local_conditions();
            let limit = g.check_scaled_limit(&ctx.run.rule);
            let passed = (global.passed || local.passed) && limit.passed != Some(false);
            Ok((
                passed,
                json!({ "global": global, "local": local, "scaled_limit": limit }),
            ))
        }
        AnalysisSpec::Schedule => {
            let r = ctx.run.schedule.assumption_report();
            Ok((r.all_hold(), to_value(&r)))
        }
        AnalysisSpec::RoutingTolls { tol } => {
            let net = ctx
                .experiment
                .network()
                .ok_or_else(|| Error::InvalidArgument("routing_tolls needs a routing game".into()))?;
            let tolls = optimal_edge_tolls(net, *tol)?;
            let nondegeneracy = nondegeneracy_check(net, &tolls.tolls, *tol)?;
            let passed = nondegeneracy.verdict == Verdict::Pass;
            Ok((passed, json!({ "optimal_tolls": tolls, "nondegeneracy": nondegeneracy })))
        }
        AnalysisSpec::Multistart {
            incentive,
            n_starts,
            seed,
            tol,
        } => {
            let p = ctx.incentive_or_default(incentive, *tol)?;
            let r = multistart_uniqueness_probe(game, &p, *n_starts, *seed, *tol, Execution::default())?;
            Ok((!r.possible_violation, to_value(&r)))
        }
        AnalysisSpec::Counterexample { options } => {
            let r = reproduce_counterexample(options)?;
            let mut csv = Vec::new();
            r.write_grid_csv(&mut csv).map_err(|e| Error::Evaluation(e.to_string()))?;
            attachments.push((
                "counterexample_grid.csv".into(),
                String::from_utf8(csv).expect("CSV is ASCII"),
            ));
            Ok((r.passed, to_value(&r)))
        }
    }
}
