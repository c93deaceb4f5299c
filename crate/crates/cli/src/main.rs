use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use incentive_cli::{list_fixtures, run_experiment, verify_experiment, CliError, ExperimentConfig, ExperimentOutcome, Status};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "incentive", version, about = "Run and verify adaptive-incentive experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment, or every `*.json` in a directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads when `--config` is a directory.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory, overriding the config's `output_dir`. With a
        /// config directory each experiment writes to `DIR/<file stem>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run only the analyses of an experiment.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List builtin network fixtures.
    ListFixtures,
}

fn report_error(e: &CliError) {
    match e {
        CliError::Config {
            path,
            line,
            column,
            message,
        } if *line > 0 => eprintln!("error: {}:{line}:{column}: {message}", path.display()),
        _ => eprintln!("error: {e}"),
    }
}

fn report(outcome: &ExperimentOutcome) {
    if let Some(s) = &outcome.summary {
        println!(
            "{}: converged={} iterations={} residual={:.3e} social_cost={:.6}",
            outcome.output_dir.display(),
            s.run.converged,
            s.run.iterations,
            s.run.final_residual,
            s.run.final_social_cost
        );
    }
    for a in &outcome.analyses {
        let verdict = if a.passed { "pass" } else { "FAIL" };
        match &a.error {
            Some(e) => println!("  {:<24} {verdict} ({e})", a.name),
            None => println!("  {:<24} {verdict}", a.name),
        }
    }
}

fn execute(path: &Path, out: Option<PathBuf>, verify: bool) -> Status {
    let result = ExperimentConfig::load(path).and_then(|config| {
        let out = out.unwrap_or_else(|| config.output_dir.clone());
        if verify {
            verify_experiment(&config, &out)
        } else {
            run_experiment(&config, &out)
        }
    });
    match result {
        Ok(outcome) => {
            report(&outcome);
            outcome.status
        }
        Err(e) => {
            report_error(&e);
            e.status()
        }
    }
}

fn run_directory(dir: &Path, jobs: usize, out: Option<PathBuf>) -> Status {
    let mut configs: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => {
            eprintln!("error: {}: {e}", dir.display());
            return Status::Invalid;
        }
    };
    configs.sort();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return Status::Invalid;
        }
    };
    pool.install(|| {
        configs
            .par_iter()
            .map(|path| {
                let stem = path.file_stem().map(PathBuf::from).unwrap_or_default();
                execute(path, out.as_ref().map(|o| o.join(&stem)), false)
            })
            .max()
            .unwrap_or(Status::Success)
    })
}

fn main() -> ExitCode {
    let status = match Cli::parse().command {
        Command::Run { config, jobs, out } if config.is_dir() => run_directory(&config, jobs, out),
        Command::Run { config, out, .. } => execute(&config, out, false),
        Command::Verify { config, out } => execute(&config, out, true),
        Command::ListFixtures => {
            print!("{}", list_fixtures());
            Status::Success
        }
    };
    ExitCode::from(status.code() as u8)
}
