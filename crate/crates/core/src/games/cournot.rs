//! Cournot duopoly with an unknown linear inverse demand.
//!
//! Two firms choose quantities `q_i ∈ [0, 3]`; the market price is
//! `p = α - β (q_1 + q_2) + ε` with `s = (α, β) ∈ {(2, 1), (4, 3)}` and truth
//! `(2, 1)`. Firm `i` earns `q_i p`. The price is a sufficient statistic of the
//! payoff vector and is what the information system observes by default.

use super::{
    check_bounds, check_sigma, interval_of, payoff_channel, BestResponse, Channel, EquilibriumSet,
    GameModel, ObservationMap, StrategyProfile, StrategySet,
};
use crate::error::Result;
use crate::param_belief::{Belief, ParameterSpace};

/// The Cournot competition game.
#[derive(Debug, Clone)]
pub struct Cournot {
    space: ParameterSpace,
    sets: Vec<StrategySet>,
    sigma: Vec<f64>,
    observation: ObservationMap,
}

impl Default for Cournot {
    fn default() -> Self {
        Self::new()
    }
}

impl Cournot {
    /// The game with `S = {(2,1), (4,3)}`, `s* = (2,1)`, `Q_i = [0,3]` and
    /// price noise variance 0.5.
    pub fn new() -> Self {
        let space = ParameterSpace::new(vec![vec![2.0, 1.0], vec![4.0, 3.0]], 0)
            .and_then(|s| s.with_labels(vec!["s1".into(), "s2".into()]))
            .expect("static parameter space");
        Self {
            space,
            sets: vec![StrategySet::interval(0.0, 3.0); 2],
            sigma: vec![0.5f64.sqrt(); 2],
            observation: ObservationMap::SufficientStatistic,
        }
    }

    /// Replaces the price-noise standard deviation of each parameter.
    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_sigma(&sigma, self.space.len())?;
        self.sigma = sigma;
        Ok(self)
    }

    /// Replaces the quantity bounds.
    pub fn with_bounds(mut self, bounds: &[[f64; 2]]) -> Result<Self> {
        self.sets = check_bounds(bounds, 2)?;
        Ok(self)
    }

    /// Chooses between observing the price and observing the payoff vector.
    pub fn with_observation(mut self, observation: ObservationMap) -> Self {
        self.observation = observation;
        self
    }

    fn expected_coefficients(belief: &Belief, space: &ParameterSpace) -> (f64, f64) {
        let mut ea = 0.0;
        let mut eb = 0.0;
        for s in belief.support() {
            ea += belief.prob(s) * space.param(s)[0];
            eb += belief.prob(s) * space.param(s)[1];
        }
        (ea, eb)
    }

    fn price_mean(params: &[f64], q: &StrategyProfile) -> f64 {
        params[0] - params[1] * (q.player(0)[0] + q.player(1)[0])
    }
}

impl GameModel for Cournot {
    fn id(&self) -> &str {
        "cournot"
    }

    fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn strategy_sets(&self) -> &[StrategySet] {
        &self.sets
    }

    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64 {
        q.player(i)[0] * Self::price_mean(params, q)
    }

    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel> {
        let params = self.space.param(s);
        match self.observation {
            ObservationMap::SufficientStatistic => vec![Channel {
                mean: Self::price_mean(params, play),
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
        let price = match self.observation {
            ObservationMap::SufficientStatistic => obs[0],
            ObservationMap::Payoffs => {
                if obs.is_empty() {
                    return vec![0.0; 2];
                }
                let (_, qj) = super::active_player(play);
                obs[0] / qj
            }
        };
        (0..2).map(|i| play.player(i)[0] * price).collect()
    }

    fn lipschitz_bound(&self) -> f64 {
        let (amax, bmax) = self
            .space
            .params()
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), p| (a.max(p[0].abs()), b.max(p[1].abs())));
        let qmax = self
            .sets
            .iter()
            .map(|s| interval_of(s).0.abs().max(interval_of(s).1.abs()))
            .fold(0.0, f64::max);
        // |∂u_i/∂q_i| ≤ α + 3βq, |∂u_i/∂q_j| ≤ βq; Euclidean gradient bound.
        ((amax + 3.0 * bmax * qmax).powi(2) + (bmax * qmax).powi(2)).sqrt()
    }

    fn analytic_best_response(&self, belief: &Belief, i: usize, q: &StrategyProfile) -> Option<BestResponse> {
        let (ea, eb) = Self::expected_coefficients(belief, &self.space);
        if eb <= 0.0 {
            return None;
        }
        let (lo, hi) = interval_of(&self.sets[i]);
        let qj = q.player(1 - i)[0];
        Some(BestResponse::point(vec![(ea / (2.0 * eb) - qj / 2.0).clamp(lo, hi)]))
    }

    fn analytic_equilibria(&self, belief: &Belief) -> Option<EquilibriumSet> {
        let (ea, eb) = Self::expected_coefficients(belief, &self.space);
        if eb <= 0.0 {
            return None;
        }
        // The best-response map is a contraction (modulus 1/2); iterate it from
        // the symmetric interior solution q = r/3, which is exact when feasible.
        let r = ea / eb;
        let mut q = StrategyProfile::scalars(&[r / 3.0, r / 3.0]);
        for i in 0..2 {
            let (lo, hi) = interval_of(&self.sets[i]);
            q.set_player(i, vec![q.player(i)[0].clamp(lo, hi)]);
        }
        for _ in 0..200 {
            let next = StrategyProfile::new(
                (0..2)
                    .map(|i| self.analytic_best_response(belief, i, &q).expect("eb > 0").strategy)
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
    fn expected_payoff_matches_hand_arithmetic() {
        let g = Cournot::new();
        let b = Belief::from_probs(&[0.5, 0.5]).unwrap();
        let q = StrategyProfile::scalars(&[0.5, 0.5]);
        // E[α] = 3, E[β] = 2: 0.5 · (3 - 2 · 1) = 0.5.
        assert!((expected_payoff(&g, &b, &q, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn best_response_and_equilibrium_under_truth() {
        let g = Cournot::new();
        let truth = Belief::point_mass(2, 0).unwrap();
        let q = StrategyProfile::scalars(&[0.0, 2.0 / 3.0]);
        let br = best_response(&g, &truth, 0, &q).unwrap();
        assert!((br.strategy[0] - 2.0 / 3.0).abs() < 1e-15);
        let eq = equilibrium_set(&g, &truth).unwrap();
        assert!(eq.distance(&StrategyProfile::scalars(&[2.0 / 3.0, 2.0 / 3.0])) < 1e-15);
        let dagger = Belief::from_probs(&[0.5, 0.5]).unwrap();
        let eq = equilibrium_set(&g, &dagger).unwrap();
        assert!(eq.distance(&StrategyProfile::scalars(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn both_parameters_give_the_same_price_at_unit_total() {
        let g = Cournot::new();
        let q = StrategyProfile::scalars(&[0.5, 0.5]);
        assert_eq!(g.channels(0, &q), g.channels(1, &q));
    }
}
