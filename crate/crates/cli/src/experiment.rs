use std::fs;
use std::path::{Path, PathBuf};

use incentive_core::analysis::GradientBaseline;
use incentive_core::dynamics::{run_coupled, run_with_target, RunSummary, TrajectoryRecord};
use incentive_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analyses::{run_analysis, AnalysisContext, AnalysisOutcome};
use crate::config::{ExperimentConfig, Mechanism};
use crate::game::Experiment;
use crate::{CliError, Status};

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Residual and social cost along the coupled run in trajectory.csv."""
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent)
with open(here / "trajectory.csv") as f:
    rows = list(csv.DictReader(f))
k = [int(r["k"]) for r in rows]
residual = [float(r["residual"]) for r in rows]
cost = [float(r["social_cost"]) for r in rows]

fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
top.semilogy(k, residual)
top.set_ylabel("fixed-point residual")
bottom.plot(k, cost)
bottom.set_ylabel("social cost")
bottom.set_xlabel("iteration")
fig.tight_layout()
fig.savefig(here / "trajectory.png", dpi=150)
"#;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub game: &'static str,
    pub mechanism: Mechanism,
    pub rule: &'static str,
    pub seed: u64,
    #[serde(flatten)]
    pub run: RunSummary,
    pub analyses: Vec<AnalysisVerdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisVerdict {
    pub name: &'static str,
    pub passed: bool,
}

/// What one invocation produced.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub summary: Option<ExperimentSummary>,
    pub analyses: Vec<AnalysisOutcome>,
    pub status: Status,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn build(config: &ExperimentConfig) -> Result<Experiment, CliError> {
    Experiment::build(&config.game).map_err(CliError::Core)
}

/// Runs the coupled iteration and every requested analysis, writing
/// `trajectory.csv`, `summary.json`, `analysis/*.json` and `plot.py`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome, CliError> {
    let experiment = build(config)?;
    let game = experiment.coupled();
    let x0 = match &config.x0 {
        Some(x) => x.clone(),
        None if config.random_start => game.random_strategy(&mut ChaCha8Rng::seed_from_u64(config.run.seed)),
        None => game.default_strategy(),
    };
    let p0 = config.p0.clone().unwrap_or_else(|| vec![0.0; game.incentive_dim()]);

    let result = match config.mechanism {
        Mechanism::Externality => run_coupled(game, &x0, &p0, &config.run),
        Mechanism::GradientBaseline { estimator } => {
            run_with_target(game, &x0, &p0, &config.run, &GradientBaseline { estimator })
        }
    };
    let record: TrajectoryRecord = match result {
        Ok(rec) => rec,
        Err(Error::NotConverged(rec)) => *rec,
        Err(e) => return Err(CliError::Core(e)),
    };

    fs::create_dir_all(out).map_err(io_err(out))?;
    let csv_path = out.join("trajectory.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    record
        .write_csv(std::io::BufWriter::new(file))
        .map_err(io_err(&csv_path))?;
    write(&out.join("plot.py"), PLOT_SCRIPT)?;

    let ctx = AnalysisContext {
        experiment: &experiment,
        run: &config.run,
        final_incentive: record.converged.then(|| record.final_p()),
    };
    let analyses = run_all(config, &ctx, out)?;
    let summary = ExperimentSummary {
        game: config.game.kind(),
        mechanism: config.mechanism,
        rule: config.run.rule.name(),
        seed: config.run.seed,
        run: record.summary(),
        analyses: analyses
            .iter()
            .map(|a| AnalysisVerdict {
                name: a.name,
                passed: a.passed,
            })
            .collect(),
    };
    let summary_path = out.join("summary.json");
    write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("summaries serialize"),
    )?;
    let status = if record.converged { Status::Success } else { Status::Failure };
    Ok(ExperimentOutcome {
        output_dir: out.to_path_buf(),
        summary: Some(summary),
        analyses,
        status,
    })
}

/// Runs only the configured analyses; fails unless every one passes.
pub fn verify_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome, CliError> {
    let experiment = build(config)?;
    let ctx = AnalysisContext {
        experiment: &experiment,
        run: &config.run,
        final_incentive: None,
    };
    let analyses = run_all(config, &ctx, out)?;
    let status = if analyses.iter().all(|a| a.passed) {
        Status::Success
    } else {
        Status::Failure
    };
    Ok(ExperimentOutcome {
        output_dir: out.to_path_buf(),
        summary: None,
        analyses,
        status,
    })
}

fn run_all(config: &ExperimentConfig, ctx: &AnalysisContext<'_>, out: &Path) -> Result<Vec<AnalysisOutcome>, CliError> {
    let outcomes: Vec<AnalysisOutcome> = config.analyses.iter().map(|a| run_analysis(a, ctx)).collect();
    if outcomes.is_empty() {
        return Ok(outcomes);
    }
    let dir = out.join("analysis");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    for (i, a) in outcomes.iter().enumerate() {
        // Repeated analyses of one kind get an index suffix.
        let repeats = outcomes.iter().filter(|b| b.name == a.name).count() > 1;
        let stem = if repeats { format!("{}_{i}", a.name) } else { a.name.to_string() };
        write(
            &dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(a).expect("reports serialize"),
        )?;
        for (name, contents) in &a.attachments {
            write(&dir.join(name), contents)?;
        }
    }
    Ok(outcomes)
}
