//! Zero-sum game with a convex penalty for strategy differences above `s`.
//!
//! Both players choose `q_i ∈ [0, 6]`. Player 1 receives
//! `v^s(q) = (max(|q_1 - q_2|, s) - s)^2 - 2 q_1^2 + ε` and player 2 its
//! negative, with `s ∈ {1, 3, 5}` and truth `3`. A single shared channel
//! carries the noise, so the realized payoffs always sum to exactly zero.

use super::{
    check_bounds, check_sigma, interval_of, BestResponse, Channel, EquilibriumSet, GameModel,
    StrategyProfile, StrategySet,
};
use crate::error::Result;
use crate::param_belief::{Belief, ParameterSpace};

/// The zero-sum example game.
#[derive(Debug, Clone)]
pub struct ZeroSum {
    space: ParameterSpace,
    sets: Vec<StrategySet>,
    sigma: Vec<f64>,
}

impl Default for ZeroSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ZeroSum {
    /// The game with `S = {1, 3, 5}`, `s* = 3`, `Q_i = [0, 6]` and unit noise.
    pub fn new() -> Self {
        let space = ParameterSpace::new(vec![vec![1.0], vec![3.0], vec![5.0]], 1)
            .expect("static parameter space");
        Self {
            space,
            sets: vec![StrategySet::interval(0.0, 6.0); 2],
            sigma: vec![1.0; 3],
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

    fn value(s: f64, q: &StrategyProfile) -> f64 {
        let q1 = q.player(0)[0];
        let d = (q1 - q.player(1)[0]).abs();
        (d.max(s) - s).powi(2) - 2.0 * q1 * q1
    }

    /// Smallest parameter value in the support of `belief`.
    fn min_support(&self, belief: &Belief) -> f64 {
        belief
            .support()
            .into_iter()
            .map(|s| self.space.param(s)[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn closed_form_valid(&self) -> bool {
        interval_of(&self.sets[0]).0 >= 0.0 && self.space.params().iter().all(|p| p[0] >= 0.0)
    }

    /// Argmax of player 2 given `q1`: the strategies within `m` of `q1`.
    fn player2_interval(&self, q1: f64, m: f64) -> (f64, f64) {
        let (lo, hi) = interval_of(&self.sets[1]);
        let a = lo.max(q1 - m);
        let b = hi.min(q1 + m);
        if a <= b {
            (a, b)
        } else {
            let p = q1.clamp(lo, hi);
            (p, p)
        }
    }
}

impl GameModel for ZeroSum {
    fn id(&self) -> &str {
        "zerosum"
    }

    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn strategy_sets(&self) -> &[StrategySet] {
        &self.sets
    }

    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64 {
        let v = Self::value(params[0], q);
        if i == 0 {
            v
        } else {
            -v
        }
    }

    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel> {
        vec![Channel {
            mean: Self::value(self.space.param(s)[0], play),
            sigma: self.sigma[s],
        }]
    }

    fn payoffs_from_observation(&self, _play: &StrategyProfile, obs: &[f64]) -> Vec<f64> {
        vec![obs[0], -obs[0]]
    }

    fn lipschitz_bound(&self) -> f64 {
        let (l0, h0) = interval_of(&self.sets[0]);
        let (l1, h1) = interval_of(&self.sets[1]);
        let dmax = (h0 - l1).abs().max((h1 - l0).abs());
        let qmax = l0.abs().max(h0.abs());
        2.0 * dmax * 2f64.sqrt() + 4.0 * qmax
    }

    fn analytic_best_response(&self, belief: &Belief, i: usize, q: &StrategyProfile) -> Option<BestResponse> {
        if !self.closed_form_valid() {
            return None;
        }
        if i == 0 {
            // The expected payoff is strictly decreasing in q1 ≥ 0.
            return Some(BestResponse::point(vec![interval_of(&self.sets[0]).0]));
        }
        let (a, b) = self.player2_interval(q.player(0)[0], self.min_support(belief));
        Some(BestResponse::interval(vec![a], vec![b], q.player(1)))
    }

    fn analytic_equilibria(&self, belief: &Belief) -> Option<EquilibriumSet> {
        if !self.closed_form_valid() {
            return None;
        }
        let q1 = interval_of(&self.sets[0]).0;
        let (a, b) = self.player2_interval(q1, self.min_support(belief));
        Some(EquilibriumSet::Box {
            lo: StrategyProfile::scalars(&[q1, a]),
            hi: StrategyProfile::scalars(&[q1, b]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{best_response, equilibrium_set};

    #[test]
    fn player_one_always_plays_zero() {
        let g = ZeroSum::new();
        let b = Belief::from_probs(&[0.2, 0.3, 0.5]).unwrap();
        for q2 in [0.0, 2.5, 6.0] {
            let br = best_response(&g, &b, 0, &StrategyProfile::scalars(&[3.0, q2])).unwrap();
            assert_eq!(br.strategy, vec![0.0]);
            assert_eq!(br.set, crate::games::BrSet::Point);
        }
    }

    #[test]
    fn equilibrium_box_under_truth() {
        let g = ZeroSum::new();
        let truth = Belief::point_mass(3, 1).unwrap();
        let eq = equilibrium_set(&g, &truth).unwrap();
        assert_eq!(
            eq,
            EquilibriumSet::Box {
                lo: StrategyProfile::scalars(&[0.0, 0.0]),
                hi: StrategyProfile::scalars(&[0.0, 3.0]),
            }
        );
    }

    #[test]
    fn realized_payoffs_cancel() {
        let g = ZeroSum::new();
        let c = g.payoffs_from_observation(&StrategyProfile::scalars(&[0.0, 1.0]), &[0.123]);
        assert_eq!(c[0] + c[1], 0.0);
    }
}
