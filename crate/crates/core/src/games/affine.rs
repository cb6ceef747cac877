//! Games whose mean payoffs are affine in the strategy profile.
//!
//! Player `i` earns `c_i = α_i · q + β_i + ε_i`, where each candidate parameter
//! fixes every player's coefficient vector `s_i = (α_i, β_i)`. These games are
//! the natural setting for least-squares estimation of the coefficients.

use serde::{Deserialize, Serialize};

use super::{
    check_bounds, check_sigma, interval_of, BestResponse, Channel, GameModel, StrategyProfile,
    StrategySet,
};
use crate::error::{contract, Result};
use crate::param_belief::{Belief, ParameterSpace};

/// Slopes below this magnitude make a player indifferent over its interval.
const INDIFFERENCE_TOL: f64 = 1e-12;

/// Coefficients of one candidate parameter: `alpha[i][j]` multiplies `q_j` in
/// player `i`'s payoff, `beta[i]` is its intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

impl AffineParams {
    /// Flattens to `(α_1, β_1, α_2, β_2, ...)`, i.e. per-player OLS coefficient blocks.
    pub fn flatten(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .flat_map(|(a, b)| a.iter().cloned().chain(std::iter::once(*b)))
            .collect()
    }
}

/// An affine-payoff game with one-dimensional strategies.
#[derive(Debug, Clone)]
pub struct AffineGame {
    space: ParameterSpace,
    sets: Vec<StrategySet>,
    sigma: Vec<f64>,
}

impl AffineGame {
    /// Builds the game from candidate coefficient sets, the index of the
    /// truth, and a noise level per candidate. Strategies live in `[0, 1]`.
    pub fn new(candidates: &[AffineParams], true_index: usize, sigma: Vec<f64>) -> Result<Self> {
        let n = candidates
            .first()
            .ok_or_else(|| contract("affine game needs at least one candidate"))?
            .beta
            .len();
        for c in candidates {
            if c.beta.len() != n || c.alpha.len() != n || c.alpha.iter().any(|row| row.len() != n) {
                return Err(contract(format!(
                    "affine candidate must have {n} players with {n} slopes each"
                )));
            }
        }
        let space = ParameterSpace::new(candidates.iter().map(AffineParams::flatten).collect(), true_index)?;
        check_sigma(&sigma, space.len())?;
        Ok(Self {
            space,
            sets: vec![StrategySet::interval(0.0, 1.0); n],
            sigma,
        })
    }

    /// A two-player instance with three candidates (truth: index 1) and noise 0.5.
    pub fn default_game() -> Self {
        let candidates = [
            AffineParams {
                alpha: vec![vec![-0.5, 0.4], vec![0.3, -0.2]],
                beta: vec![1.0, 0.5],
            },
            AffineParams {
                alpha: vec![vec![0.2, 0.4], vec![0.3, -0.6]],
                beta: vec![0.8, 0.5],
            },
            AffineParams {
                alpha: vec![vec![0.6, 0.1], vec![0.5, 0.4]],
                beta: vec![0.6, 0.9],
            },
        ];
        Self::new(&candidates, 1, vec![0.5; 3]).expect("static affine game")
    }

    /// Replaces the noise standard deviation of each candidate.
    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_sigma(&sigma, self.space.len())?;
        self.sigma = sigma;
        Ok(self)
    }

    /// Replaces the strategy bounds.
    pub fn with_bounds(mut self, bounds: &[[f64; 2]]) -> Result<Self> {
        self.sets = check_bounds(bounds, self.sets.len())?;
        Ok(self)
    }

    /// Coefficient block `s_i = (α_i, β_i)` of player `i` inside a flat parameter vector.
    pub fn block<'a>(&self, params: &'a [f64], i: usize) -> &'a [f64] {
        let w = self.sets.len() + 1;
        &params[i * w..(i + 1) * w]
    }
}

impl GameModel for AffineGame {
    fn id(&self) -> &str {
        "affine_game"
    }

    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn strategy_sets(&self) -> &[StrategySet] {
        &self.sets
    }

    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64 {
        let s = self.block(params, i);
        let n = self.sets.len();
        (0..n).map(|j| s[j] * q.player(j)[0]).sum::<f64>() + s[n]
    }

    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel> {
        let params = self.space.param(s);
        (0..self.sets.len())
            .map(|i| Channel {
                mean: self.mean_payoff_at(params, play, i),
                sigma: self.sigma[s],
            })
            .collect()
    }

    fn payoffs_from_observation(&self, _play: &StrategyProfile, obs: &[f64]) -> Vec<f64> {
        obs.to_vec()
    }

    fn lipschitz_bound(&self) -> f64 {
        let n = self.sets.len();
        self.space
            .params()
            .iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    p[i * (n + 1)..i * (n + 1) + n]
                        .iter()
                        .map(|a| a * a)
                        .sum::<f64>()
                        .sqrt()
                })
            })
            .fold(0.0, f64::max)
    }

    fn analytic_best_response(&self, belief: &Belief, i: usize, q: &StrategyProfile) -> Option<BestResponse> {
        // The payoff is linear in the own strategy: a corner, or the whole
        // interval when the expected own slope vanishes.
        let slope: f64 = belief
            .support()
            .into_iter()
            .map(|s| belief.prob(s) * self.block(self.space.param(s), i)[i])
            .sum();
        let (lo, hi) = interval_of(&self.sets[i]);
        Some(if slope > INDIFFERENCE_TOL {
            BestResponse::point(vec![hi])
        } else if slope < -INDIFFERENCE_TOL {
            BestResponse::point(vec![lo])
        } else {
            BestResponse::interval(vec![lo], vec![hi], q.player(i))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{equilibrium_set, EquilibriumSet};

    #[test]
    fn flattened_blocks_match_ols_layout() {
        let p = AffineParams {
            alpha: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            beta: vec![5.0, 6.0],
        };
        assert_eq!(p.flatten(), vec![1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let g = AffineGame::default_game();
        let q = StrategyProfile::scalars(&[0.5, 1.0]);
        let s = g.space().param(1).to_vec();
        assert!((g.mean_payoff_at(&s, &q, 0) - (0.2 * 0.5 + 0.4 + 0.8)).abs() < 1e-15);
    }

    #[test]
    fn equilibria_come_from_the_numeric_fallback() {
        let g = AffineGame::default_game();
        let truth = Belief::point_mass(3, 1).unwrap();
        // Player 1's own slope is +0.2 (plays 1), player 2's is -0.6 (plays 0).
        let eq = equilibrium_set(&g, &truth).unwrap();
        match eq {
            EquilibriumSet::FiniteList { points } => {
                assert_eq!(points.len(), 1);
                assert!(points[0].distance(&StrategyProfile::scalars(&[1.0, 0.0])) < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
