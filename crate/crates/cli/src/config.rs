use std::path::{Path, PathBuf};

use incentive_core::aggregative::AggregativeGame;
use incentive_core::analysis::{CounterexampleOptions, GradientEstimator, QuadraticForm};
use incentive_core::dynamics::RunConfig;
use incentive_core::routing::RoutingNetwork;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One experiment: a game, how incentives are updated, the coupled run and
/// any analyses, all in a single JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    #[serde(default)]
    pub mechanism: Mechanism,
    #[serde(default)]
    pub run: RunConfig,
    /// Initial strategy; defaults to the game's default strategy, or a
    /// seeded random one with `random_start`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Initial incentive; defaults to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(default)]
    pub random_start: bool,
    #[serde(default)]
    pub analyses: Vec<AnalysisSpec>,
    /// Relative paths resolve against the working directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameSpec {
    /// A shipped routing fixture: `two_link`, `pigou` or `braess`.
    Builtin { name: String },
    Aggregative(AggregativeGame),
    Routing { network: RoutingNetwork },
    /// Non-atomic game with affine action costs `C x + b`.
    AffinePopulation(AffinePopulationSpec),
}

impl GameSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GameSpec::Builtin { .. } => "builtin",
            GameSpec::Aggregative(_) => "aggregative",
            GameSpec::Routing { .. } => "routing",
            GameSpec::AffinePopulation(_) => "affine_population",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub mass: f64,
    pub actions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePopulationSpec {
    pub populations: Vec<PopulationSpec>,
    /// Row-major `C`.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// How the planner updates incentives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mechanism {
    /// Blend towards the current externality.
    #[default]
    Externality,
    /// Gradient descent on the equilibrium social cost.
    GradientBaseline {
        #[serde(default)]
        estimator: GradientEstimator,
    },
}

/// Random incentive samples: explicit points, or `count` points drawn
/// uniformly from the box of half-width `scale` around a center (the optimal
/// incentive unless stated otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "SampleSpec::default_count")]
    pub count: usize,
    #[serde(default = "SampleSpec::default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SampleSpec {
    fn default_count() -> usize {
        10
    }
    fn default_scale() -> f64 {
        1.0
    }
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            points: None,
            count: Self::default_count(),
            scale: Self::default_scale(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    /// Certify an incentive (the run's final one, or the optimal one under
    /// `verify`) as an optimal fixed point.
    VerifyFixedPoint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        incentive: Option<Vec<f64>>,
        #[serde(default = "defaults::certify_tol")]
        tol: f64,
    },
    /// Forward-Euler probe of the slow incentive dynamics.
    OdeProbe {
        step: f64,
        horizon: f64,
        start_points: Vec<Vec<f64>>,
        #[serde(default = "defaults::inner_tol")]
        inner_tol: f64,
        /// Terminal distance to the optimal incentive counted as convergence.
        #[serde(default = "defaults::radius")]
        radius: f64,
    },
    /// Sampled cooperative-system condition on `p ↦ e(x*(p))`.
    CrossPartial {
        #[serde(default)]
        samples: SampleSpec,
        #[serde(default = "defaults::inner_tol")]
        tol: f64,
    },
    /// Sampled Lyapunov decrement; the form defaults to the canonical one for
    /// aggregative and routing games.
    Lyapunov {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        form: Option<QuadraticForm>,
        #[serde(default)]
        samples: SampleSpec,
        #[serde(default = "defaults::inner_tol")]
        tol: f64,
    },
    /// Matrix conditions and the scaled-limit spectrum of an aggregative game.
    AggregativeConditions,
    /// Symbolic step-size assumptions of the run's schedule.
    Schedule,
    /// Marginal-cost tolls of a routing game and their nondegeneracy.
    RoutingTolls {
        #[serde(default = "defaults::flow_tol")]
        tol: f64,
    },
    /// Equilibrium solves from random starts under one incentive.
    Multistart {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        incentive: Option<Vec<f64>>,
        #[serde(default = "defaults::n_starts")]
        n_starts: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "defaults::inner_tol")]
        tol: f64,
    },
    /// The two-link counterexample; ignores the configured game.
    Counterexample {
        #[serde(default)]
        options: CounterexampleOptions,
    },
}

mod defaults {
    pub fn certify_tol() -> f64 {
        1e-6
    }
    pub fn inner_tol() -> f64 {
        1e-10
    }
    pub fn radius() -> f64 {
        1e-3
    }
    pub fn flow_tol() -> f64 {
        1e-9
    }
    pub fn n_starts() -> usize {
        10
    }
}

impl AnalysisSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisSpec::VerifyFixedPoint { .. } => "verify_fixed_point",
            AnalysisSpec::OdeProbe { .. } => "ode_probe",
            AnalysisSpec::CrossPartial { .. } => "cross_partial",
            AnalysisSpec::Lyapunov { .. } => "lyapunov",
            AnalysisSpec::AggregativeConditions => "aggregative_conditions",
            AnalysisSpec::Schedule => "schedule",
            AnalysisSpec::RoutingTolls { .. } => "routing_tolls",
            AnalysisSpec::Multistart { .. } => "multistart",
            AnalysisSpec::Counterexample { .. } => "counterexample",
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a config. Syntax and schema errors carry the
    /// line and column reported by the JSON parser.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate().map_err(|message| CliError::Config {
            path: origin.to_path_buf(),
            line: 0,
            column: 0,
            message,
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    fn validate(&self) -> Result<(), String> {
        self.run.validate().map_err(|e| e.to_string())?;
        if let GameSpec::Builtin { name } = &self.game {
            if !incentive_core::routing::FIXTURES.iter().any(|(n, _)| n == name) {
                return Err(format!("unknown builtin fixture {name:?}"));
            }
        }
        Ok(())
    }
}
