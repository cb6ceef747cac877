//! Games with an unknown payoff parameter: strategy sets, parametric mean
//! payoffs, Gaussian observation channels, and best-response / equilibrium
//! oracles, plus the concrete games shipped with the crate.

mod affine;
mod congestion;
mod coordination;
mod cournot;
mod equilibrium;
mod investment;
mod solver;
mod strategy;
mod zerosum;

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use affine::{AffineGame, AffineParams};
pub use congestion::TwoRouteCongestion;
pub use coordination::CoordinationPenalty;
pub use cournot::Cournot;
pub use equilibrium::{EquilibriumSet, HAUSDORFF_SAMPLES};
pub use investment::Investment;
pub use solver::{
    best_response_numeric, best_response_to_params, equilibrium_set_numeric, FLAT_TOL,
    GOLDEN_ITERATIONS, GOLDEN_TOL,
};
pub use strategy::{pure_action, StrategyProfile, StrategySet, FEASIBILITY_TOL};
pub use zerosum::ZeroSum;

use crate::error::{contract, Result};
use crate::param_belief::{Belief, ParameterSpace};

/// One Gaussian observation channel: mean and standard deviation.
///
/// A zero standard deviation declares a degenerate (atomic) channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub mean: f64,
    pub sigma: f64,
}

/// What the information system sees of each stage's realized payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMap {
    /// A declared sufficient statistic (price, unit return).
    #[default]
    SufficientStatistic,
    /// The realized payoff vector itself.
    Payoffs,
}

/// The argmax of a best-response problem beyond its canonical element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BrSet {
    /// The maximizer is unique.
    Point,
    /// Every strategy with coordinates in `[lo, hi]` is a maximizer.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Every mixture of these pure actions is a maximizer.
    Actions { actions: Vec<usize> },
}

/// A best response: one canonical maximizer plus a description of the argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// The maximizer closest to the player's current strategy.
    pub strategy: Vec<f64>,
    /// The full argmax when it is set-valued.
    pub set: BrSet,
}

impl BestResponse {
    /// A unique maximizer.
    pub fn point(strategy: Vec<f64>) -> Self {
        Self {
            strategy,
            set: BrSet::Point,
        }
    }

    /// An interval argmax `[lo, hi]` with the element nearest `current` as canonical.
    pub fn interval(lo: Vec<f64>, hi: Vec<f64>, current: &[f64]) -> Self {
        if lo == hi {
            return Self::point(lo);
        }
        let strategy = current
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(c, (l, h))| c.clamp(*l, *h))
            .collect();
        Self {
            strategy,
            set: BrSet::Box { lo, hi },
        }
    }

    /// Distance from `x` to the argmax.
    pub fn distance_to_set(&self, x: &[f64]) -> f64 {
        match &self.set {
            BrSet::Point => dist(&self.strategy, x),
            BrSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (v - v.clamp(*l, *h)).powi(2))
                .sum::<f64>()
                .sqrt(),
            BrSet::Actions { actions } => {
                // Distance to the face of the simplex spanned by `actions`:
                // mass outside the face has to move.
                let outside: f64 = x
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| !actions.contains(k))
                    .map(|(_, v)| v.abs())
                    .sum();
                outside
            }
        }
    }

    /// Extreme points of the argmax (used to test set inclusion).
    pub fn extreme_points(&self) -> Vec<Vec<f64>> {
        match &self.set {
            BrSet::Point => vec![self.strategy.clone()],
            BrSet::Box { lo, hi } => {
                let free: Vec<usize> = (0..lo.len()).filter(|&k| hi[k] > lo[k]).collect();
                (0..1usize << free.len().min(12))
                    .map(|mask| {
                        let mut v = lo.clone();
                        for (bit, &k) in free.iter().enumerate() {
                            if mask >> bit & 1 == 1 {
                                v[k] = hi[k];
                            }
                        }
                        v
                    })
                    .collect()
            }
            BrSet::Actions { actions } => actions
                .iter()
                .map(|&a| pure_action(self.strategy.len(), a))
                .collect(),
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// A repeated game whose payoffs depend on an unknown parameter `s ∈ S`.
///
/// Implementors provide mean payoffs at arbitrary parameter vectors (so point
/// estimates such as OLS coefficients can drive best responses), the Gaussian
/// channels observed at a realized play, and optionally closed-form best
/// responses and equilibrium sets.
pub trait GameModel: Send + Sync + fmt::Debug {
    /// Stable identifier used in configs and reports.
    fn id(&self) -> &str;

    /// The parameter set and the true parameter.
    fn space(&self) -> &ParameterSpace;

    /// Strategy set of every player.
    fn strategy_sets(&self) -> &[StrategySet];

    /// Mean payoff `u_i(q)` of player `i` under the parameter vector `params`.
    /// For finite games `q` may be mixed; the payoff is then the expectation.
    fn mean_payoff_at(&self, params: &[f64], q: &StrategyProfile, i: usize) -> f64;

    /// Observation channels at a realized (pure, for finite games) profile
    /// under parameter `s`. The number of channels depends on `play` only.
    fn channels(&self, s: usize, play: &StrategyProfile) -> Vec<Channel>;

    /// Realized payoff of every player given the play and the observed channel values.
    fn payoffs_from_observation(&self, play: &StrategyProfile, obs: &[f64]) -> Vec<f64>;

    /// Bound on `|u_i(q) - u_i(q')| / |q - q'|` over the strategy space.
    fn lipschitz_bound(&self) -> f64;

    /// Closed-form best response, when available.
    fn analytic_best_response(
        &self,
        _belief: &Belief,
        _i: usize,
        _q: &StrategyProfile,
    ) -> Option<BestResponse> {
        None
    }

    /// Closed-form equilibrium set `EQ(θ)`, when available.
    fn analytic_equilibria(&self, _belief: &Belief) -> Option<EquilibriumSet> {
        None
    }

    /// Number of players.
    fn n_players(&self) -> usize {
        self.strategy_sets().len()
    }

    /// Mean payoff `u_i^s(q)` of the parameter at index `s`.
    fn mean_payoff(&self, s: usize, q: &StrategyProfile, i: usize) -> f64 {
        self.mean_payoff_at(self.space().param(s), q, i)
    }

    /// True when every player has a finite action set.
    fn is_finite(&self) -> bool {
        self.strategy_sets().iter().all(StrategySet::is_finite)
    }
}

/// Checks that `q` has the right shape and lies in the strategy sets.
pub fn check_feasible(game: &dyn GameModel, q: &StrategyProfile) -> Result<()> {
    let sets = game.strategy_sets();
    if q.n_players() != sets.len() {
        return Err(contract(format!(
            "profile has {} players, game {} has {}",
            q.n_players(),
            game.id(),
            sets.len()
        )));
    }
    for (i, set) in sets.iter().enumerate() {
        if !set.contains(q.player(i)) {
            return Err(contract(format!(
                "strategy {:?} of player {i} is not in {set:?}",
                q.player(i)
            )));
        }
    }
    Ok(())
}

/// Expected payoff `Σ_s θ(s) u_i^s(q)`.
pub fn expected_payoff(game: &dyn GameModel, belief: &Belief, q: &StrategyProfile, i: usize) -> f64 {
    belief
        .support()
        .into_iter()
        .map(|s| {
            let w = belief.prob(s);
            if w == 0.0 {
                0.0
            } else {
                w * game.mean_payoff(s, q, i)
            }
        })
        .sum()
}

/// Best response of player `i` to `q_{-i}` under `belief`; the closed form is
/// used when the game provides one, the numeric solver otherwise. Player `i`'s
/// own entry of `q` is the current strategy used to pick the canonical element.
pub fn best_response(
    game: &dyn GameModel,
    belief: &Belief,
    i: usize,
    q: &StrategyProfile,
) -> Result<BestResponse> {
    if let Some(br) = game.analytic_best_response(belief, i, q) {
        return Ok(br);
    }
    best_response_numeric(game, belief, i, q)
}

/// The simultaneous best-response profile (canonical elements).
pub fn best_response_profile(
    game: &dyn GameModel,
    belief: &Belief,
    q: &StrategyProfile,
) -> Result<StrategyProfile> {
    let mut out = q.clone();
    for i in 0..game.n_players() {
        out.set_player(i, best_response(game, belief, i, q)?.strategy);
    }
    Ok(out)
}

/// The equilibrium set `EQ(θ)`: closed form when available, otherwise damped
/// iterated best response from random starts.
pub fn equilibrium_set(game: &dyn GameModel, belief: &Belief) -> Result<EquilibriumSet> {
    if let Some(eq) = game.analytic_equilibria(belief) {
        return Ok(eq);
    }
    equilibrium_set_numeric(game, belief)
}

/// One noisy observation of a stage: channel values and realized payoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Values of the observed channels.
    pub channels: Vec<f64>,
    /// Realized payoff of every player.
    pub payoffs: Vec<f64>,
}

/// Draws an observation at `play` under parameter `s`: each channel is its mean
/// plus independent Gaussian noise (a degenerate channel returns its mean).
pub fn sample_observation<R: Rng + ?Sized>(
    game: &dyn GameModel,
    s: usize,
    play: &StrategyProfile,
    rng: &mut R,
) -> Observation {
    let channels: Vec<f64> = game
        .channels(s, play)
        .iter()
        .map(|ch| {
            let z: f64 = rng.sample(StandardNormal);
            if ch.sigma == 0.0 {
                ch.mean
            } else {
                ch.mean + ch.sigma * z
            }
        })
        .collect();
    let payoffs = game.payoffs_from_observation(play, &channels);
    Observation { channels, payoffs }
}

/// Realized payoff vector at `play` under parameter `s`.
pub fn sample_payoffs<R: Rng + ?Sized>(
    game: &dyn GameModel,
    s: usize,
    play: &StrategyProfile,
    rng: &mut R,
) -> Vec<f64> {
    sample_observation(game, s, play, rng).payoffs
}

/// Names accepted by [`game_by_id`].
pub const GAME_IDS: [&str; 6] = [
    "cournot",
    "zerosum",
    "investment",
    "coordination_penalty",
    "two_route_congestion",
    "affine_game",
];

/// Optional overrides applied to a shipped game.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GameOverrides {
    /// Noise standard deviation per parameter.
    pub sigma: Option<Vec<f64>>,
    /// Per-player `[lo, hi]` bounds of one-dimensional strategy sets.
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Number of players (two-route congestion only).
    pub n_players: Option<usize>,
    /// Observation map (Cournot and investment only).
    pub observation: Option<ObservationMap>,
}

/// Builds one of the shipped games by identifier.
pub fn game_by_id(id: &str, overrides: &GameOverrides) -> Result<Box<dyn GameModel>> {
    let game: Box<dyn GameModel> = match id {
        "cournot" => {
            let mut g = Cournot::new();
            if let Some(s) = &overrides.sigma {
                g = g.with_sigma(s.clone())?;
            }
            if let Some(b) = &overrides.bounds {
                g = g.with_bounds(b)?;
            }
            if let Some(o) = overrides.observation {
                g = g.with_observation(o);
            }
            Box::new(g)
        }
        "zerosum" => {
            let mut g = ZeroSum::new();
            if let Some(s) = &overrides.sigma {
                g = g.with_sigma(s.clone())?;
            }
            if let Some(b) = &overrides.bounds {
                g = g.with_bounds(b)?;
            }
            Box::new(g)
        }
        "investment" => {
            let mut g = Investment::new();
            if let Some(s) = &overrides.sigma {
                g = g.with_sigma(s.clone())?;
            }
            if let Some(b) = &overrides.bounds {
                g = g.with_bounds(b)?;
            }
            if let Some(o) = overrides.observation {
                g = g.with_observation(o);
            }
            Box::new(g)
        }
        "coordination_penalty" => {
            let mut g = CoordinationPenalty::new();
            if let Some(s) = &overrides.sigma {
                g = g.with_sigma(s.clone())?;
            }
            if let Some(b) = &overrides.bounds {
                g = g.with_bounds(b)?;
            }
            Box::new(g)
        }
        "two_route_congestion" => {
            let mut g = TwoRouteCongestion::new(overrides.n_players.unwrap_or(2))?;
            if let Some(s) = &overrides.sigma {
                g = g.with_sigma(s.clone())?;
            }
            Box::new(g)
        }
        "affine_game" => {
            let mut g = AffineGame::default_game();
            if let Some(s) = &overrides.sigma {
                g = g.with_sigma(s.clone())?;
            }
            if let Some(b) = &overrides.bounds {
                g = g.with_bounds(b)?;
            }
            Box::new(g)
        }
        other => return Err(contract(format!("unknown game id {other:?}"))),
    };
    if overrides.n_players.is_some() && id != "two_route_congestion" {
        return Err(contract(format!(
            "game {id} has a fixed number of players; n_players cannot be overridden"
        )));
    }
    if overrides.observation.is_some() && !matches!(id, "cournot" | "investment") {
        return Err(contract(format!(
            "game {id} has no alternative observation map"
        )));
    }
    Ok(game)
}

/// Validates a per-parameter σ vector (length and non-negativity).
pub(crate) fn check_sigma(sigma: &[f64], n_params: usize) -> Result<()> {
    if sigma.len() != n_params {
        return Err(contract(format!(
            "{} noise levels given for {n_params} parameters",
            sigma.len()
        )));
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(contract("noise standard deviations must be finite and non-negative"));
    }
    Ok(())
}

/// Validates per-player one-dimensional bounds.
pub(crate) fn check_bounds(bounds: &[[f64; 2]], n_players: usize) -> Result<Vec<StrategySet>> {
    if bounds.len() != n_players {
        return Err(contract(format!(
            "{} bounds given for {n_players} players",
            bounds.len()
        )));
    }
    bounds
        .iter()
        .map(|[lo, hi]| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(StrategySet::interval(*lo, *hi))
            } else {
                Err(contract(format!("invalid bounds [{lo}, {hi}]")))
            }
        })
        .collect()
}

/// Lower and upper bound of a one-dimensional box strategy set.
pub(crate) fn interval_of(set: &StrategySet) -> (f64, f64) {
    match set {
        StrategySet::Box { lo, hi } => (lo[0], hi[0]),
        StrategySet::Simplex { .. } => (0.0, 1.0),
    }
}

/// Channels of a payoff-observing map for games whose payoff vector is a
/// deterministic rank-one function of a scalar statistic: the payoff of the
/// most active player carries all the information (none when nobody plays).
pub(crate) fn payoff_channel(
    q: &StrategyProfile,
    mean_payoff: impl Fn(usize) -> f64,
    sigma: f64,
) -> Vec<Channel> {
    let (j, qj) = active_player(q);
    if qj == 0.0 {
        return Vec::new();
    }
    vec![Channel {
        mean: mean_payoff(j),
        sigma: qj * sigma,
    }]
}

/// Index and level of the player with the largest one-dimensional strategy
/// (lowest index on ties).
pub(crate) fn active_player(q: &StrategyProfile) -> (usize, f64) {
    let mut best = (0, q.player(0)[0]);
    for i in 1..q.n_players() {
        if q.player(i)[0] > best.1 {
            best = (i, q.player(i)[0]);
        }
    }
    best
}
