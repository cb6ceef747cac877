//! Routing over two parallel edges with an unknown congestion slope.
//!
//! Each of `n` players picks edge `e_1` or `e_2`. An edge with load `x` costs
//! `s x + 1 + ε` with `s ∈ {1, 2}` (truth 1); a player's payoff is minus the
//! cost of its edge. Only edges that carry traffic are observed.

use super::{
    check_sigma, pure_action, BestResponse, BrSet, Channel, EquilibriumSet, GameModel,
    StrategyProfile, StrategySet, FLAT_TOL,
};
use crate::error::{contract, Result};
use crate::param_belief::{Belief, ParameterSpace};

const EDGES: usize = 2;
const MAX_ENUMERATED_PLAYERS: usize = 16;

/// The two-route congestion game.
#[derive(Debug, Clone)]
pub struct TwoRouteCongestion {
    space: ParameterSpace,
    sets: Vec<StrategySet>,
    sigma: Vec<f64>,
}

impl TwoRouteCongestion {
    /// `n` players, `S = {1, 2}`, `s* = 1`, unit noise.
    pub fn new(n_players: usize) -> Result<Self> {
        if !(1..=MAX_ENUMERATED_PLAYERS).contains(&n_players) {
            return Err(contract(format!(
                "two-route congestion supports 1..={MAX_ENUMERATED_PLAYERS} players, got {n_players}"
            )));
        }
        let space = ParameterSpace::new(vec![vec![1.0], vec![2.0]], 0)?;
        Ok(Self {
            space,
            sets: vec![StrategySet::Simplex { actions: EDGES }; n_players],
            sigma: vec![1.0; 2],
        })
    }

    /// Replaces the noise standard deviation of each parameter (0 gives
    /// noiseless costs).
    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_sigma(&sigma, self.space.len())?;
        self.sigma = sigma;
        Ok(self)
    }

    /// The edge chosen by a pure strategy (the largest weight).
    pub fn action_of(q_i: &[f64]) -> usize {
        if q_i[1] > q_i[0] {
            1
        } else {
            0
        }
    }

    fn loads(play: &StrategyProfile) -> [usize; EDGES] {
        let mut x = [0; EDGES];
        for i in 0..play.n_players() {
            x[Self::action_of(play.player(i))] += 1;
        }
        x
    }

    /// Expected cost of each edge for player `i` given the others' mixed strategies.
    fn edge_costs(slope: f64, q: &StrategyProfile, i: usize) -> [f64; EDGES] {
        let mut out = [0.0; EDGES];
        for (e, c) in out.iter_mut().enumerate() {
            let others: f64 = (0..q.n_players()).filter(|&j| j != i).map(|j| q.player(j)[e]).sum();
            *c = slope * (1.0 + others) + 1.0;
        }
        out
    }

    fn expected_slope(&self, belief: &Belief) -> f64 {
        belief
            .support()
            .into_iter()
            .map(|s| belief.prob(s) * self.space.param(s)[0])
            .sum()
    }
}

impl GameModel for TwoRouteCongestion {
    fn id(&self) -> &str {
        "two_route_congestion"
    }

    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn strategy_sets(&self) -> &[StrategySet] {
        &self.sets
    }

    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64 {
        let costs = Self::edge_costs(params[0], q, i);
        -(0..EDGES).map(|e| q.player(i)[e] * costs[e]).sum::<f64>()
    }

    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel> {
        let slope = self.space.param(s)[0];
        Self::loads(play)
            .iter()
            .filter(|x| **x > 0)
            .map(|x| Channel {
                mean: slope * *x as f64 + 1.0,
                sigma: self.sigma[s],
            })
            .collect()
    }

    fn payoffs_from_observation(&self, play: &StrategyProfile, obs: &[f64]) -> Vec<f64> {
        let loads = Self::loads(play);
        let mut slot = [usize::MAX; EDGES];
        let mut k = 0;
        for e in 0..EDGES {
            if loads[e] > 0 {
                slot[e] = k;
                k += 1;
            }
        }
        (0..play.n_players())
            .map(|i| -obs[slot[Self::action_of(play.player(i))]])
            .collect()
    }

    fn lipschitz_bound(&self) -> f64 {
        let smax = self.space.params().iter().map(|p| p[0].abs()).fold(0.0, f64::max);
        let n = self.sets.len() as f64;
        (smax * n + 1.0) * (2.0 * n).sqrt()
    }

    fn analytic_best_response(&self, belief: &Belief, i: usize, q: &StrategyProfile) -> Option<BestResponse> {
        let costs = Self::edge_costs(self.expected_slope(belief), q, i);
        let best = costs[0].min(costs[1]);
        let level = best + FLAT_TOL * best.abs().max(1.0);
        let argmin: Vec<usize> = (0..EDGES).filter(|&e| costs[e] <= level).collect();
        let current = q.player(i);
        let mut pick = argmin[0];
        for &e in &argmin {
            if current[e] > current[pick] {
                pick = e;
            }
        }
        let strategy = pure_action(EDGES, pick);
        Some(if argmin.len() == 1 {
            BestResponse::point(strategy)
        } else {
            BestResponse {
                strategy,
                set: BrSet::Actions { actions: argmin },
            }
        })
    }

    fn analytic_equilibria(&self, belief: &Belief) -> Option<EquilibriumSet> {
        if self.expected_slope(belief) <= 0.0 {
            return None;
        }
        // Pure equilibria balance the loads to within one player; the
        // symmetric fifty-fifty mixture is the remaining symmetric equilibrium.
        let n = self.sets.len();
        let mut points: Vec<StrategyProfile> = (0..1usize << n)
            .filter(|mask| {
                let on_second = mask.count_ones() as i64;
                (n as i64 - 2 * on_second).abs() <= 1
            })
            .map(|mask| {
                StrategyProfile::new((0..n).map(|i| pure_action(EDGES, mask >> i & 1)).collect())
            })
            .collect();
        points.push(StrategyProfile::new(vec![vec![0.5, 0.5]; n]));
        Some(EquilibriumSet::FiniteList { points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::best_response_profile;

    #[test]
    fn both_on_first_edge_switch_together() {
        let g = TwoRouteCongestion::new(2).unwrap();
        let b = Belief::uniform(2);
        let q = StrategyProfile::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let next = best_response_profile(&g, &b, &q).unwrap();
        assert_eq!(next, StrategyProfile::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]));
    }

    #[test]
    fn only_used_edges_are_observed() {
        let g = TwoRouteCongestion::new(2).unwrap();
        let q = StrategyProfile::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(g.channels(0, &q), vec![Channel { mean: 3.0, sigma: 1.0 }]);
        assert_eq!(g.payoffs_from_observation(&q, &[3.5]), vec![-3.5, -3.5]);
        let split = StrategyProfile::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(g.channels(1, &split).len(), 2);
        assert_eq!(g.payoffs_from_observation(&split, &[2.0, 4.0]), vec![-2.0, -4.0]);
    }

    #[test]
    fn equilibria_of_two_players() {
        let g = TwoRouteCongestion::new(2).unwrap();
        let eq = g.analytic_equilibria(&Belief::uniform(2)).unwrap();
        match eq {
            EquilibriumSet::FiniteList { points } => assert_eq!(points.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
