//! Coordination game with a penalty that steepens beyond unit distance.
//!
//! Player 1 chooses `q_1 ∈ [0, 2]`, player 2 `q_2 ∈ [1, 4]`. Both pay
//! `(q_1 - q_2)^2` when `|q_1 - q_2| ≤ 1` and `(1 + s (|q_1 - q_2| - 1))^2`
//! beyond, with `s ∈ {2, 4}` (truth 2). Player 1 also pays `q_1`, player 2
//! gains `q_2`. Each payoff is observed with independent noise.

use super::{
    check_bounds, check_sigma, interval_of, BestResponse, Channel, EquilibriumSet, GameModel,
    StrategyProfile, StrategySet,
};
use crate::error::Result;
use crate::param_belief::{Belief, ParameterSpace};

/// The coordination-with-increasing-penalty game.
#[derive(Debug, Clone)]
pub struct CoordinationPenalty {
    space: ParameterSpace,
    sets: Vec<StrategySet>,
    sigma: Vec<f64>,
}

impl Default for CoordinationPenalty {
    fn default() -> Self {
        Self::new()
    }
}

impl CoordinationPenalty {
    /// The game with `S = {2, 4}`, `s* = 2`, `Q_1 = [0, 2]`, `Q_2 = [1, 4]`, unit noise.
    pub fn new() -> Self {
        let space = ParameterSpace::new(vec![vec![2.0], vec![4.0]], 0).expect("static parameter space");
        Self {
            space,
            sets: vec![StrategySet::interval(0.0, 2.0), StrategySet::interval(1.0, 4.0)],
            sigma: vec![1.0; 2],
        }
    }

    /// Replaces the noise standard deviation of each parameter.
    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_sigma(&sigma, self.space.len())?;
        self.sigma = sigma;
        Ok(self)
    }

    /// Replaces the strategy bounds.
    pub fn with_bounds(mut self, bounds: &[[f64; 2]]) -> Result<Self> {
        self.sets = check_bounds(bounds, 2)?;
        Ok(self)
    }

    /// The coordination cost at distance `d` under slope `s`.
    pub fn cost(s: f64, d: f64) -> f64 {
        let a = d.abs();
        if a <= 1.0 {
            d * d
        } else {
            (1.0 + s * (a - 1.0)).powi(2)
        }
    }

    /// Below slope 1 the cost is no longer convex and the closed forms fail.
    fn closed_form_valid(&self) -> bool {
        self.space.params().iter().all(|p| p[0] >= 1.0)
    }
}

impl GameModel for CoordinationPenalty {
    fn id(&self) -> &str {
        "coordination_penalty"
    }

    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn strategy_sets(&self) -> &[StrategySet] {
        &self.sets
    }

    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64 {
        let (q1, q2) = (q.player(0)[0], q.player(1)[0]);
        let c = Self::cost(params[0], q1 - q2);
        if i == 0 {
            -c - q1
        } else {
            -c + q2
        }
    }

    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel> {
        let params = self.space.param(s);
        (0..2)
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
        let (l0, h0) = interval_of(&self.sets[0]);
        let (l1, h1) = interval_of(&self.sets[1]);
        let dmax = (h0 - l1).abs().max((h1 - l0).abs()).max(1.0);
        let smax = self.space.params().iter().map(|p| p[0].abs()).fold(1.0, f64::max);
        let dcost = 2.0 * (1.0 + smax * (dmax - 1.0)) * smax;
        dcost * 2f64.sqrt() + 1.0
    }

    fn analytic_best_response(&self, _belief: &Belief, i: usize, q: &StrategyProfile) -> Option<BestResponse> {
        if !self.closed_form_valid() {
            return None;
        }
        // The interior optimum sits at distance 1/2, inside the quadratic
        // branch, whatever the slope beyond unit distance.
        let (lo, hi) = interval_of(&self.sets[i]);
        let target = if i == 0 {
            q.player(1)[0] - 0.5
        } else {
            q.player(0)[0] + 0.5
        };
        Some(BestResponse::point(vec![target.clamp(lo, hi)]))
    }

    fn analytic_equilibria(&self, _belief: &Belief) -> Option<EquilibriumSet> {
        if !self.closed_form_valid() {
            return None;
        }
        let (l0, h0) = interval_of(&self.sets[0]);
        let (l1, h1) = interval_of(&self.sets[1]);
        let a = l0.max(l1 - 0.5);
        let b = h0.min(h1 - 0.5);
        if a > b {
            return None;
        }
        Some(EquilibriumSet::Line {
            from: StrategyProfile::scalars(&[a, a + 0.5]),
            to: StrategyProfile::scalars(&[b, b + 0.5]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::equilibrium_set;

    #[test]
    fn cost_branches_meet_at_the_knot() {
        for s in [2.0, 4.0] {
            assert_eq!(CoordinationPenalty::cost(s, 1.0), 1.0);
            assert!((CoordinationPenalty::cost(s, 1.0 + 1e-12) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn equilibria_form_the_half_offset_segment() {
        let g = CoordinationPenalty::new();
        let eq = equilibrium_set(&g, &Belief::uniform(2)).unwrap();
        assert_eq!(
            eq,
            EquilibriumSet::Line {
                from: StrategyProfile::scalars(&[0.5, 1.0]),
                to: StrategyProfile::scalars(&[2.0, 2.5]),
            }
        );
    }
}
