//! The learner state `(θ^t, q^t)` and one stage of the coupled dynamics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rule::{Estimator, UpdateRule};
use crate::error::{contract, Error, Result};
use crate::games::{
    best_response, best_response_to_params, check_feasible, pure_action, sample_observation,
    BestResponse, BrSet, GameModel, StrategyProfile, StrategySet,
};
use crate::param_belief::{bayes_update, Belief, ObservationBatch, OlsState, ScheduleKind, UpdateSchedule};

/// Everything observed and decided at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Stage index, starting at 1.
    pub t: u64,
    /// The belief `θ^t` in force during the stage.
    pub theta: Vec<f64>,
    /// `log θ^t`, exact where the probabilities underflow.
    pub log_theta: Vec<f64>,
    /// The strategy profile `q^t` (mixed in finite games).
    pub q: StrategyProfile,
    /// The realized play (a pure profile in finite games, `q^t` otherwise).
    pub play: StrategyProfile,
    /// Observed channel values.
    pub obs: Vec<f64>,
    /// Realized payoffs `c^t`.
    pub payoffs: Vec<f64>,
    /// True when `t` is an update stage `k_j`.
    pub updated: bool,
}

/// The state of the learning dynamics at the start of a stage.
#[derive(Debug, Clone)]
pub struct LearnerState {
    t: u64,
    belief: Belief,
    strategy: StrategyProfile,
    pending: ObservationBatch,
    schedule: UpdateSchedule,
    next_k: u64,
    last_update: u64,
    estimator: Estimator,
    ols: Option<OlsState>,
    ols_estimate: Option<Vec<f64>>,
}

impl LearnerState {
    /// Initial state at stage 1 (which is the first update stage `k_1`).
    pub fn new<R: Rng + ?Sized>(
        game: &dyn GameModel,
        belief: Belief,
        strategy: StrategyProfile,
        schedule: ScheduleKind,
        estimator: Estimator,
        rng: &mut R,
    ) -> Result<Self> {
        if belief.len() != game.space().len() {
            return Err(contract(format!(
                "belief over {} parameters for a game with {}",
                belief.len(),
                game.space().len()
            )));
        }
        check_feasible(game, &strategy)?;
        let ols = if estimator == Estimator::Ols {
            let dim: usize = strategy.dims().iter().sum();
            let n = game.n_players();
            if game.space().dim() != n * (dim + 1) {
                return Err(contract(format!(
                    "OLS needs an affine payoff model with {} coefficients, game {} has {}",
                    n * (dim + 1),
                    game.id(),
                    game.space().dim()
                )));
            }
            Some(OlsState::new(dim, n))
        } else {
            None
        };
        let mut schedule = UpdateSchedule::new(schedule)?;
        let next_k = schedule.next_stage(rng);
        Ok(Self {
            t: 1,
            belief,
            strategy,
            pending: ObservationBatch::default(),
            schedule,
            next_k,
            last_update: 1,
            estimator,
            ols,
            ols_estimate: None,
        })
    }

    /// Current stage `t`.
    pub fn stage(&self) -> u64 {
        self.t
    }

    /// The Bayesian posterior maintained by the learner.
    pub fn posterior(&self) -> &Belief {
        &self.belief
    }

    /// The belief `θ^t` of the dynamics: the posterior, or the point mass on
    /// its mode for the MAP estimator.
    pub fn belief(&self) -> Belief {
        match self.estimator {
            Estimator::Map => Belief::point_mass(self.belief.len(), self.belief.mode())
                .expect("mode is a valid index"),
            _ => self.belief.clone(),
        }
    }

    /// Current strategy profile `q^t`.
    pub fn strategy(&self) -> &StrategyProfile {
        &self.strategy
    }

    /// Observations collected since the last update stage.
    pub fn pending(&self) -> &ObservationBatch {
        &self.pending
    }

    /// The next update stage.
    pub fn next_update(&self) -> u64 {
        self.next_k
    }

    /// The most recent update stage.
    pub fn last_update(&self) -> u64 {
        self.last_update
    }

    /// The estimator driving best responses.
    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    /// Latest least-squares estimate (flattened per-player blocks), once identifiable.
    pub fn ols_estimate(&self) -> Option<&[f64]> {
        self.ols_estimate.as_deref()
    }

    fn respond(&self, game: &dyn GameModel, belief: &Belief, i: usize, q: &StrategyProfile) -> Result<BestResponse> {
        match &self.ols_estimate {
            Some(params) => best_response_to_params(game, params, i, q),
            None => best_response(game, belief, i, q),
        }
    }
}

pub(crate) fn sample_pure_profile<R: Rng + ?Sized>(game: &dyn GameModel, q: &StrategyProfile, rng: &mut R) -> StrategyProfile {
    StrategyProfile::new(
        game.strategy_sets()
            .iter()
            .enumerate()
            .map(|(i, set)| match set {
                StrategySet::Simplex { actions } => {
                    let u: f64 = rng.gen();
                    let w = q.player(i);
                    let mut acc = 0.0;
                    let mut chosen = None;
                    for (a, p) in w.iter().enumerate() {
                        acc += p;
                        if *p > 0.0 && u < acc {
                            chosen = Some(a);
                            break;
                        }
                    }
                    // Rounding can leave `u` just above the cumulative sum.
                    let a = chosen.unwrap_or_else(|| w.iter().rposition(|p| *p > 0.0).unwrap_or(0));
                    pure_action(*actions, a)
                }
                StrategySet::Box { .. } => q.player(i).to_vec(),
            })
            .collect(),
    )
}

fn draw_best_action<R: Rng + ?Sized>(br: &BestResponse, rng: &mut R) -> usize {
    match &br.set {
        BrSet::Actions { actions } if !actions.is_empty() => actions[rng.gen_range(0..actions.len())],
        _ => br
            .strategy
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (a, w)| if *w > best.1 { (a, *w) } else { best })
            .0,
    }
}

/// Advances the dynamics by one stage and returns the stage record.
///
/// Order of events at stage `t`: the play is realized (a pure profile drawn
/// from `q^t` in finite games; a best response to `q^t` under fictitious
/// play), an observation is drawn from the true parameter and appended to the
/// pending batch, the belief is updated if `t + 1` is an update stage, and
/// finally the rule produces `q^{t+1}`.
pub fn step<R: Rng + ?Sized>(
    state: &mut LearnerState,
    rule: &UpdateRule,
    game: &dyn GameModel,
    rng: &mut R,
) -> Result<StageRecord> {
    let t = state.t;
    let n = game.n_players();
    let theta_t = state.belief();
    let q_t = state.strategy.clone();

    let mut fp_actions = Vec::new();
    let play = if *rule == UpdateRule::FictitiousPlay {
        for i in 0..n {
            let br = state.respond(game, &theta_t, i, &q_t)?;
            fp_actions.push(draw_best_action(&br, rng));
        }
        StrategyProfile::new(
            fp_actions
                .iter()
                .zip(game.strategy_sets())
                .map(|(a, set)| pure_action(set.dim(), *a))
                .collect(),
        )
    } else if game.is_finite() {
        sample_pure_profile(game, &q_t, rng)
    } else {
        q_t.clone()
    };

    let obs = sample_observation(game, game.space().true_index(), &play, rng);
    state.pending.push(play.clone(), obs.channels.clone());
    if let Some(ols) = state.ols.as_mut() {
        ols.ingest(&play, &obs.payoffs)?;
    }
    let record = StageRecord {
        t,
        theta: theta_t.probs().to_vec(),
        log_theta: theta_t.log_probs().to_vec(),
        q: q_t.clone(),
        play,
        obs: obs.channels,
        payoffs: obs.payoffs,
        updated: t == state.last_update,
    };

    if t + 1 == state.next_k {
        state.belief = bayes_update(&state.belief, &state.pending, game)?;
        state.pending.clear();
        state.last_update = t + 1;
        state.next_k = state.schedule.next_stage(rng);
        if let Some(ols) = &state.ols {
            match ols.solve() {
                Ok(coefs) => state.ols_estimate = Some(coefs.concat()),
                Err(Error::Unidentifiable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let theta_next = state.belief();

    let mut next = q_t.clone();
    match rule {
        UpdateRule::Simultaneous => {
            for i in 0..n {
                next.set_player(i, state.respond(game, &theta_next, i, &q_t)?.strategy);
            }
        }
        UpdateRule::Sequential => {
            let i = ((t - 1) % n as u64) as usize;
            next.set_player(i, state.respond(game, &theta_next, i, &q_t)?.strategy);
        }
        UpdateRule::Linear { alpha } => {
            let a = alpha.alpha(t);
            for i in 0..n {
                let br = state.respond(game, &theta_next, i, &q_t)?.strategy;
                let moved = q_t
                    .player(i)
                    .iter()
                    .zip(&br)
                    .map(|(x, b)| (1.0 - a) * x + a * b)
                    .collect();
                next.set_player(i, moved);
            }
        }
        UpdateRule::FictitiousPlay => {
            let tf = t as f64;
            for (i, a) in fp_actions.iter().enumerate() {
                let moved = q_t
                    .player(i)
                    .iter()
                    .enumerate()
                    .map(|(k, x)| (tf * x + if k == *a { 1.0 } else { 0.0 }) / (tf + 1.0))
                    .collect();
                next.set_player(i, moved);
            }
        }
    }
    check_feasible(game, &next)?;
    state.strategy = next;
    state.t += 1;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{Cournot, Investment, TwoRouteCongestion};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(game: &dyn GameModel, belief: Belief, q: &[f64], rng: &mut ChaCha8Rng) -> LearnerState {
        LearnerState::new(
            game,
            belief,
            StrategyProfile::scalars(q),
            ScheduleKind::EveryStage,
            Estimator::Bayes,
            rng,
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_is_stationary() {
        let g = Cournot::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = Belief::point_mass(2, 0).unwrap();
        let mut st = state(&g, truth, &[2.0 / 3.0, 2.0 / 3.0], &mut rng);
        for _ in 0..50 {
            let before = st.strategy().clone();
            step(&mut st, &UpdateRule::Simultaneous, &g, &mut rng).unwrap();
            assert!(st.strategy().distance(&before) < 1e-15);
            assert_eq!(st.posterior().probs(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn sequential_rule_moves_exactly_one_player() {
        let g = Investment::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut st = state(&g, Belief::from_probs(&[0.5, 0.4, 0.1]).unwrap(), &[1.0, 0.0], &mut rng);
        for t in 1..=6u64 {
            let before = st.strategy().clone();
            step(&mut st, &UpdateRule::Sequential, &g, &mut rng).unwrap();
            let moved = (t - 1) as usize % 2;
            assert_eq!(st.strategy().player(1 - moved), before.player(1 - moved));
        }
    }

    #[test]
    fn pending_batch_tracks_schedule() {
        let g = Cournot::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut st = LearnerState::new(
            &g,
            Belief::uniform(2),
            StrategyProfile::scalars(&[1.0, 1.0]),
            ScheduleKind::FixedBatch { batch: 4 },
            Estimator::Bayes,
            &mut rng,
        )
        .unwrap();
        for _ in 0..13 {
            assert_eq!(st.pending().len() as u64, st.stage() - st.last_update());
            let rec = step(&mut st, &UpdateRule::Simultaneous, &g, &mut rng).unwrap();
            assert_eq!(rec.updated, rec.t % 4 == 1);
        }
    }

    #[test]
    fn congestion_alternates_without_noise() {
        let g = TwoRouteCongestion::new(2).unwrap().with_sigma(vec![0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = StrategyProfile::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let mut st = LearnerState::new(&g, Belief::uniform(2), q, ScheduleKind::EveryStage, Estimator::Bayes, &mut rng)
            .unwrap();
        for t in 1..=20u64 {
            let rec = step(&mut st, &UpdateRule::Simultaneous, &g, &mut rng).unwrap();
            let expected = if t % 2 == 1 { [1.0, 0.0] } else { [0.0, 1.0] };
            assert_eq!(rec.q.player(0), expected);
            assert_eq!(rec.q.player(1), expected);
        }
    }

    #[test]
    fn ols_needs_an_affine_parameterization() {
        let g = Cournot::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let err = LearnerState::new(
            &g,
            Belief::uniform(2),
            StrategyProfile::scalars(&[1.0, 1.0]),
            ScheduleKind::EveryStage,
            Estimator::Ols,
            &mut rng,
        );
        assert!(err.is_err());
    }
}
