//! The coupled learning loop: strategy update rules interleaved with scheduled
//! belief updates, trajectory recording, and parallel replicas.

mod rule;
mod state;
mod trajectory;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rule::{AlphaSchedule, Estimator, UpdateRule};
pub use state::{step, LearnerState, StageRecord};
pub(crate) use state::sample_pure_profile;
pub use trajectory::{
    format_float, ConvergenceCriteria, ConvergenceTracker, EquilibriumDistance, Trajectory,
    TrajectorySummary, CONVERGENCE_TOL, CONVERGENCE_WINDOW, MAX_CYCLE_PERIOD,
};

use crate::error::{contract, Error, Result};
use crate::games::{equilibrium_set, GameModel, StrategyProfile};
use crate::param_belief::{Belief, GapFn, ScheduleKind};

/// Options of [`run_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// What the players best-respond to.
    pub estimator: Estimator,
    /// Convergence detection parameters.
    pub convergence: ConvergenceCriteria,
    /// Allow an initial belief that already excludes parameters (for
    /// starting at a candidate fixed point).
    pub allow_partial_support: bool,
    /// Record the distance of `q^{k_t}` to `EQ(θ^{k_t})` at every update stage.
    pub track_equilibrium_distance: bool,
    /// Keep per-stage records (the summary is always produced).
    pub record_stages: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::Bayes,
            convergence: ConvergenceCriteria::default(),
            allow_partial_support: false,
            track_equilibrium_distance: false,
            record_stages: true,
        }
    }
}

/// Simulates `horizon` stages from `init` with default options.
pub fn run(
    game: &dyn GameModel,
    rule: &UpdateRule,
    schedule: ScheduleKind,
    init: (Belief, StrategyProfile),
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    run_with(game, rule, schedule, init, horizon, seed, &RunOptions::default())
}

/// Simulates `horizon` stages from `init`. The run is a pure function of its
/// arguments: the same seed gives a bit-identical trajectory.
pub fn run_with(
    game: &dyn GameModel,
    rule: &UpdateRule,
    schedule: ScheduleKind,
    init: (Belief, StrategyProfile),
    horizon: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<Trajectory> {
    let (belief, strategy) = init;
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    if !options.allow_partial_support && !belief.has_full_support() {
        return Err(Error::Precondition(format!(
            "initial belief {:?} excludes some parameter",
            belief.probs()
        )));
    }
    rule.validate(game.is_finite())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = LearnerState::new(game, belief, strategy, schedule, options.estimator, &mut rng)?;
    let mut tracker = ConvergenceTracker::new(options.convergence);
    tracker.push(state.belief().probs(), &state.strategy().flat());
    let mut records = Vec::with_capacity(if options.record_stages { horizon as usize } else { 0 });
    let mut eq_distances = Vec::new();
    let mut updates = 0;
    for _ in 0..horizon {
        let rec = step(&mut state, rule, game, &mut rng)?;
        let belief = state.belief();
        tracker.push(belief.probs(), &state.strategy().flat());
        if state.last_update() == state.stage() {
            updates += 1;
            if options.track_equilibrium_distance {
                let eq = equilibrium_set(game, &belief)?;
                eq_distances.push(EquilibriumDistance {
                    stage: state.stage(),
                    distance: eq.distance(state.strategy()),
                });
            }
        }
        if options.record_stages {
            records.push(rec);
        }
    }
    Ok(Trajectory {
        records,
        summary: TrajectorySummary {
            horizon,
            seed,
            converged: tracker.converged(),
            t_stop: tracker.stop_stage(),
            cycle_period: tracker.cycle_period(),
            final_belief: state.belief().probs().to_vec(),
            final_strategy: state.strategy().clone(),
            updates,
            nearest_fixed_point: None,
            fixed_point_distance: None,
            equilibrium_distances: eq_distances,
        },
    })
}

/// Two-timescale run: belief updates at stages spaced by `gap`, strategies
/// updated every stage, with the distance to `EQ(θ^{k_t})` recorded at every
/// update. A bounded gap is accepted (with a warning) so that the constant-1
/// gap reproduces the every-stage schedule.
pub fn run_two_timescale(
    game: &dyn GameModel,
    rule: &UpdateRule,
    gap: GapFn,
    init: (Belief, StrategyProfile),
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    if !gap.is_unbounded() {
        warn!("two-timescale gap {gap:?} is bounded; the timescales do not separate");
    }
    let options = RunOptions {
        track_equilibrium_distance: true,
        ..RunOptions::default()
    };
    run_with(game, rule, ScheduleKind::TwoTimescale { gap }, init, horizon, seed, &options)
}

/// Seed of replica `index` derived from `master` by a counter-based split:
/// the first output of the ChaCha stream numbered `index`.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Runs `count` replicas in parallel, replica `k` receiving
/// `replica_seed(master, k)`; results are returned in replica order.
pub fn run_replicas<T, F>(master: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|k| f(k, replica_seed(master, k as u64)))
        .collect()
}

/// A strategy profile drawn uniformly from the strategy sets (Dirichlet(1)
/// on simplices) with a seeded generator.
pub fn random_profile(game: &dyn GameModel, seed: u64) -> StrategyProfile {
    use crate::games::StrategySet;
    use rand::Rng;
    use rand_distr::Exp1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StrategyProfile::new(
        game.strategy_sets()
            .iter()
            .map(|set| match set {
                StrategySet::Box { lo, hi } => lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| if h > l { rng.gen_range(*l..=*h) } else { *l })
                    .collect(),
                StrategySet::Simplex { actions } => {
                    let e: Vec<f64> = (0..*actions).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                    let total: f64 = e.iter().sum();
                    e.iter().map(|v| v / total).collect()
                }
            })
            .collect(),
    )
}

/// A uniformly random belief with full support, drawn from a seeded generator.
pub fn random_belief(n: usize, seed: u64) -> Result<Belief> {
    use rand::Rng;
    use rand_distr::Exp1;
    if n == 0 {
        return Err(contract("belief must have at least one entry"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    Belief::from_log_weights(&e.iter().map(|v| (v / total).ln()).collect::<Vec<_>>())
}
