//! Joint investment game with an unknown market state.
//!
//! Two players invest `q_i ∈ [0, 1]`; the unit return is
//! `r = s + q_1 + q_2 + ε` with state `s ∈ {0, 1, 2}` (truth 1), and player
//! `i` earns `q_i (r - 3 q_i) = q_i (s - 2 q_i + q_{-i} + ε)`. The return is
//! a sufficient statistic of the payoff vector. The noise standard deviation
//! depends on the state: `√3, √5, √10` for low, medium and high.

use super::{
    check_bounds, check_sigma, interval_of, payoff_channel, BestResponse, Channel, EquilibriumSet,
    GameModel, ObservationMap, StrategyProfile, StrategySet,
};
use crate::error::Result;
use crate::param_belief::{Belief, ParameterSpace};

/// The investment game.
#[derive(Debug, Clone)]
pub struct Investment {
    space: ParameterSpace,
    sets: Vec<StrategySet>,
    sigma: Vec<f64>,
    observation: ObservationMap,
}

impl Default for Investment {
    fn default() -> Self {
        Self::new()
    }
}

impl Investment {
    /// The game with `S = {0, 1, 2}`, `s* = 1` and `Q_i = [0, 1]`.
    pub fn new() -> Self {
        let space = ParameterSpace::new(vec![vec![0.0], vec![1.0], vec![2.0]], 1)
            .and_then(|s| s.with_labels(vec!["low".into(), "medium".into(), "high".into()]))
            .expect("static parameter space");
        Self {
            space,
            sets: vec![StrategySet::interval(0.0, 1.0); 2],
            sigma: vec![3f64.sqrt(), 5f64.sqrt(), 10f64.sqrt()],
            observation: ObservationMap::SufficientStatistic,
        }
    }

    /// Replaces the return-noise standard deviation of each state.
    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_sigma(&sigma, self.space.len())?;
        self.sigma = sigma;
        Ok(self)
    }

    /// Replaces the investment bounds.
    pub fn with_bounds(mut self, bounds: &[[f64; 2]]) -> Result<Self> {
        self.sets = check_bounds(bounds, 2)?;
        Ok(self)
    }

    /// Chooses between observing the unit return and observing the payoff vector.
    pub fn with_observation(mut self, observation: ObservationMap) -> Self {
        self.observation = observation;
        self
    }

    /// Noise standard deviation of state `s`.
    pub fn sigma(&self, s: usize) -> f64 {
        self.sigma[s]
    }

    fn expected_state(&self, belief: &Belief) -> f64 {
        belief
            .support()
            .into_iter()
            .map(|s| belief.prob(s) * self.space.param(s)[0])
            .sum()
    }

    fn return_mean(params: &[f64], q: &StrategyProfile) -> f64 {
        params[0] + q.player(0)[0] + q.player(1)[0]
    }
}

impl GameModel for Investment {
    fn id(&self) -> &str {
        "investment"
    }

    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn strategy_sets(&self) -> &[StrategySet] {
        &self.sets
    }

    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64 {
        let qi = q.player(i)[0];
        qi * (Self::return_mean(params, q) - 3.0 * qi)
    }

    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel> {
        let params = self.space.param(s);
        match self.observation {
            ObservationMap::SufficientStatistic => vec![Channel {
                mean: Self::return_mean(params, play),
                sigma: self.sigma[s],
            }],
            ObservationMap::Payoffs => payoff_channel(
                play,
                |j| self.mean_payoff_at(params, play, j),
                self.sigma[s],
            ),
        }
    }

    fn payoffs_from_observation(&self, play: &StrategyProfile, obs: &[f64]) -> Vec<f64> {
        let r = match self.observation {
            ObservationMap::SufficientStatistic => obs[0],
            ObservationMap::Payoffs => {
                if obs.is_empty() {
                    return vec![0.0; 2];
                }
                let (_, qj) = super::active_player(play);
                obs[0] / qj + 3.0 * qj
            }
        };
        (0..2)
            .map(|i| {
                let qi = play.player(i)[0];
                qi * (r - 3.0 * qi)
            })
            .collect()
    }

    fn lipschitz_bound(&self) -> f64 {
        let smax = self
            .space
            .params()
            .iter()
            .map(|p| p[0].abs())
            .fold(0.0, f64::max);
        let qmax = self
            .sets
            .iter()
            .map(|s| interval_of(s).0.abs().max(interval_of(s).1.abs()))
            .fold(0.0, f64::max);
        // |∂u_i/∂q_i| ≤ s + 5q, |∂u_i/∂q_j| ≤ q.
        ((smax + 5.0 * qmax).powi(2) + qmax.powi(2)).sqrt()
    }

    fn analytic_best_response(&self, belief: &Belief, i: usize, q: &StrategyProfile) -> Option<BestResponse> {
        let (lo, hi) = interval_of(&self.sets[i]);
        let qj = q.player(1 - i)[0];
        Some(BestResponse::point(vec![
            ((self.expected_state(belief) + qj) / 4.0).clamp(lo, hi),
        ]))
    }

    fn analytic_equilibria(&self, belief: &Belief) -> Option<EquilibriumSet> {
        // Symmetric interior solution q = E[s]/3, polished by the (modulus 1/4)
        // contraction so that clipped bounds are handled too.
        let es = self.expected_state(belief);
        let mut q = StrategyProfile::scalars(&[es / 3.0, es / 3.0]);
        for i in 0..2 {
            let (lo, hi) = interval_of(&self.sets[i]);
            q.set_player(i, vec![q.player(i)[0].clamp(lo, hi)]);
        }
        for _ in 0..200 {
            let next = StrategyProfile::new(
                (0..2)
                    .map(|i| self.analytic_best_response(belief, i, &q).expect("closed form").strategy)
                    .collect(),
            );
            if next == q {
                break;
            }
            q = next;
        }
        Some(EquilibriumSet::Point { q })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{best_response, equilibrium_set, expected_payoff};

    #[test]
    fn payoff_and_best_response_under_truth() {
        let g = Investment::new();
        let truth = Belief::point_mass(3, 1).unwrap();
        let q = StrategyProfile::scalars(&[1.0 / 3.0, 1.0 / 3.0]);
        assert!((expected_payoff(&g, &truth, &q, 0) - 2.0 / 9.0).abs() < 1e-15);
        let br = best_response(&g, &truth, 0, &q).unwrap();
        assert!((br.strategy[0] - 1.0 / 3.0).abs() < 1e-15);
        let eq = equilibrium_set(&g, &truth).unwrap();
        assert!(eq.distance(&q) < 1e-15);
    }

    #[test]
    fn realized_payoffs_follow_the_return() {
        let g = Investment::new();
        let q = StrategyProfile::scalars(&[0.5, 0.25]);
        let c = g.payoffs_from_observation(&q, &[2.0]);
        assert!((c[0] - 0.5 * (2.0 - 1.5)).abs() < 1e-15);
        assert!((c[1] - 0.25 * (2.0 - 0.75)).abs() < 1e-15);
    }
}
