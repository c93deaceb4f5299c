use serde::{Deserialize, Serialize};

use super::CoupledGame;
use crate::game::nonatomic::logit_response;
use crate::{vecops, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// Projected gradient step.
    #[default]
    Quadratic,
    /// Logit choice with temperature `η`; simplex strategy spaces only.
    Entropy,
}

/// How players choose the target `f(x, p)` of their strategy update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyUpdateRule {
    /// Jump towards the Nash equilibrium `x*(p)`.
    #[default]
    Equilibrium,
    /// Jump towards the simultaneous best response.
    BestResponse,
    /// Regularised gradient step. `step` fixes `η`; otherwise `η = 0.9 / L`
    /// with `L` taken from `lipschitz` or estimated at the start point.
    Gradient {
        #[serde(default)]
        step: Option<f64>,
        #[serde(default)]
        lipschitz: Option<f64>,
        #[serde(default)]
        regularizer: Regularizer,
    },
}

impl StrategyUpdateRule {
    pub fn gradient(step: f64) -> Self {
        StrategyUpdateRule::Gradient {
            step: Some(step),
            lipschitz: None,
            regularizer: Regularizer::Quadratic,
        }
    }

    pub fn logit(temperature: f64) -> Self {
        StrategyUpdateRule::Gradient {
            step: Some(temperature),
            lipschitz: None,
            regularizer: Regularizer::Entropy,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyUpdateRule::Equilibrium => "equilibrium",
            StrategyUpdateRule::BestResponse => "best_response",
            StrategyUpdateRule::Gradient {
                regularizer: Regularizer::Quadratic,
                ..
            } => "gradient",
            StrategyUpdateRule::Gradient {
                regularizer: Regularizer::Entropy,
                ..
            } => "logit",
        }
    }

    /// Fixes every free parameter against `game`, estimating the Lipschitz
    /// bound at `x` when needed.
    pub fn resolve<G: CoupledGame + ?Sized>(&self, game: &G, x: &[f64]) -> Result<ResolvedRule> {
        match *self {
            StrategyUpdateRule::Equilibrium => Ok(ResolvedRule::Equilibrium),
            StrategyUpdateRule::BestResponse => Ok(ResolvedRule::BestResponse),
            StrategyUpdateRule::Gradient {
                step,
                lipschitz,
                regularizer,
            } => {
                if regularizer == Regularizer::Entropy && game.population_layout().is_none() {
                    return Err(Error::invalid_argument(
                        "the entropy regularizer needs a simplex strategy space",
                    ));
                }
                let eta = match (step, lipschitz) {
                    (Some(eta), _) => eta,
                    (None, Some(l)) => {
                        if !(l > 0.0 && l.is_finite()) {
                            return Err(Error::invalid_argument(format!(
                                "Lipschitz bound must be positive, got {l}"
                            )));
                        }
                        0.9 / l
                    }
                    (None, None) => {
                        let l = game.cost_lipschitz(x)?;
                        if !(l > 0.0 && l.is_finite()) {
                            return Err(Error::invalid_argument(
                                "estimated Lipschitz bound is zero; supply a step",
                            ));
                        }
                        0.9 / l
                    }
                };
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::invalid_argument(format!(
                        "gradient step must be positive, got {eta}"
                    )));
                }
                Ok(ResolvedRule::Gradient { eta, regularizer })
            }
        }
    }
}

/// A [`StrategyUpdateRule`] with its step size fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedRule {
    Equilibrium,
    BestResponse,
    Gradient { eta: f64, regularizer: Regularizer },
}

impl ResolvedRule {
    /// The target `f(x, p)`.
    pub fn target<G: CoupledGame + ?Sized>(&self, game: &G, x: &[f64], p: &[f64], tol: f64) -> Result<Vec<f64>> {
        match *self {
            ResolvedRule::Equilibrium => game.equilibrium(p, x, tol),
            ResolvedRule::BestResponse => game.best_response(x, p, tol),
            ResolvedRule::Gradient { eta, regularizer } => {
                let c = game.cost_operator(x, p)?;
                match regularizer {
                    Regularizer::Quadratic => {
                        let z: Vec<f64> = x.iter().zip(&c).map(|(a, g)| a - eta * g).collect();
                        Ok(game.project(&z))
                    }
                    Regularizer::Entropy => {
                        let layout = game
                            .population_layout()
                            .ok_or_else(|| Error::invalid_argument("entropy rule needs a simplex strategy space"))?;
                        Ok(logit_response(layout, &c, eta))
                    }
                }
            }
        }
    }

    /// `(1 − γ) x + γ f(x, p)`.
    pub fn step<G: CoupledGame + ?Sized>(
        &self,
        game: &G,
        x: &[f64],
        p: &[f64],
        gamma: f64,
        tol: f64,
    ) -> Result<Vec<f64>> {
        Ok(vecops::blend(x, &self.target(game, x, p, tol)?, gamma))
    }
}
