//! Strategy update rules and belief estimators.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Step sizes `α^t` of the linear rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    /// `α^t = 1/t`.
    Harmonic,
    /// `α^t = value` for every stage.
    Constant { value: f64 },
}

impl AlphaSchedule {
    /// `α^t` for stage `t ≥ 1`.
    pub fn alpha(&self, t: u64) -> f64 {
        match self {
            AlphaSchedule::Harmonic => 1.0 / t.max(1) as f64,
            AlphaSchedule::Constant { value } => *value,
        }
    }
}

/// How players revise their strategies after each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateRule {
    /// Every player moves to its canonical best response.
    Simultaneous,
    /// Only player `(t − 1) mod n` (0-indexed) moves at stage `t`.
    Sequential,
    /// `q_i ← (1 − α^t) q_i + α^t BR_i`.
    Linear { alpha: AlphaSchedule },
    /// Finite games: play a best response to the opponents' empirical action
    /// frequencies and add it to the own frequency.
    FictitiousPlay,
}

impl UpdateRule {
    /// The linear rule with the default step sizes `α^t = 1/t`.
    pub fn linear() -> Self {
        UpdateRule::Linear {
            alpha: AlphaSchedule::Harmonic,
        }
    }

    /// Validates the rule against the game kind.
    pub fn validate(&self, finite_game: bool) -> Result<()> {
        match self {
            UpdateRule::Linear {
                alpha: AlphaSchedule::Constant { value },
            } if !(0.0..=1.0).contains(value) => Err(contract(format!(
                "linear step size {value} is not in [0, 1]"
            ))),
            UpdateRule::FictitiousPlay if !finite_game => {
                Err(contract("fictitious play needs a game with finite action sets"))
            }
            _ => Ok(()),
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            UpdateRule::Simultaneous => "simultaneous",
            UpdateRule::Sequential => "sequential",
            UpdateRule::Linear { .. } => "linear",
            UpdateRule::FictitiousPlay => "fictitious_play",
        }
    }
}

/// What the players best-respond to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// The Bayesian posterior.
    #[default]
    Bayes,
    /// The point mass on the posterior mode.
    Map,
    /// Least-squares coefficients of an affine payoff model.
    Ols,
}

impl Estimator {
    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Bayes => "bayes",
            Estimator::Map => "map",
            Estimator::Ols => "ols",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_steps_start_at_one() {
        assert_eq!(AlphaSchedule::Harmonic.alpha(1), 1.0);
        assert_eq!(AlphaSchedule::Harmonic.alpha(4), 0.25);
    }

    #[test]
    fn rule_validation() {
        assert!(UpdateRule::FictitiousPlay.validate(false).is_err());
        assert!(UpdateRule::FictitiousPlay.validate(true).is_ok());
        let bad = UpdateRule::Linear {
            alpha: AlphaSchedule::Constant { value: 1.5 },
        };
        assert!(bad.validate(false).is_err());
    }
}
