//! Numeric best responses and the damped best-response equilibrium search.
//!
//! Every shipped game has an expected payoff that is concave in the player's
//! own strategy, so a golden-section search per coordinate finds the global
//! maximizer of the box-constrained problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{
    expected_payoff, pure_action, BestResponse, BrSet, EquilibriumSet, GameModel, StrategyProfile,
    StrategySet,
};
use crate::error::{Error, Result};
use crate::param_belief::Belief;

/// Golden-section iterations per coordinate.
pub const GOLDEN_ITERATIONS: usize = 200;
/// Final bracket width required from the golden-section search.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Objective values within this (scaled) tolerance of the maximum count as maximal.
pub const FLAT_TOL: f64 = 1e-12;
/// Sweeps of cyclic coordinate ascent for multi-dimensional strategies.
const COORDINATE_SWEEPS: usize = 50;
/// Flat regions narrower than this fraction of the interval are rounding noise
/// around a unique maximizer, not a set-valued argmax.
const MIN_FLAT_FRACTION: f64 = 1e-4;

const EQ_STARTS: usize = 20;
const EQ_DAMPING: f64 = 0.5;
const EQ_MAX_ITERATIONS: usize = 10_000;
const EQ_RESIDUAL_TOL: f64 = 1e-10;
const EQ_CLUSTER_TOL: f64 = 1e-6;
const EQ_SEED: u64 = 0xe9_5eed;

fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, player: usize) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc.is_nan() || fd.is_nan() {
            return Err(Error::Solver { player, lo: a, hi: b });
        }
        if b - a <= GOLDEN_TOL {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if b - a > GOLDEN_TOL {
        return Err(Error::Solver { player, lo: a, hi: b });
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    // The search never evaluates the end points; maxima on the boundary are
    // snapped exactly.
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Boundary of the superlevel set `{f ≥ level}` between an inside point and an
/// outside point of a concave function.
fn level_boundary(f: &dyn Fn(f64) -> f64, inside: f64, outside: f64, level: f64) -> f64 {
    let (mut a, mut b) = (inside, outside);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if f(m) >= level {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Maximizes a concave function of one variable on `[lo, hi]`, detecting
/// flat maxima. `current` selects the canonical element of a flat argmax.
fn maximize_interval(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    current: f64,
    player: usize,
) -> Result<(f64, Option<(f64, f64)>)> {
    if hi <= lo {
        return Ok((lo, None));
    }
    let (x, fmax) = golden_max(f, lo, hi, player)?;
    let level = fmax - FLAT_TOL * fmax.abs().max(1.0);
    let left = if f(lo) >= level { lo } else { level_boundary(f, x, lo, level) };
    let right = if f(hi) >= level { hi } else { level_boundary(f, x, hi, level) };
    if right - left <= MIN_FLAT_FRACTION * (hi - lo) {
        return Ok((x, None));
    }
    // A genuine plateau evaluates to one exact value; resolve its edges to
    // machine precision instead of the tolerance-widened superlevel set.
    let mid = 0.5 * (left + right);
    let plateau = f(mid);
    let (left, right) = if plateau == fmax || f(x) == plateau {
        let l = if f(lo) >= plateau { lo } else { level_boundary(f, mid, lo, plateau) };
        let r = if f(hi) >= plateau { hi } else { level_boundary(f, mid, hi, plateau) };
        (l, r)
    } else {
        (left, right)
    };
    Ok((current.clamp(left, right), Some((left, right))))
}

/// Maximizes `objective` over a strategy set; `current` breaks ties.
fn maximize(
    objective: &dyn Fn(&[f64]) -> f64,
    set: &StrategySet,
    current: &[f64],
    player: usize,
) -> Result<BestResponse> {
    match set {
        StrategySet::Simplex { actions } => {
            let values: Vec<f64> = (0..*actions)
                .map(|a| objective(&pure_action(*actions, a)))
                .collect();
            if values.iter().any(|v| v.is_nan()) {
                return Err(Error::Solver { player, lo: 0.0, hi: 1.0 });
            }
            let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let level = best - FLAT_TOL * best.abs().max(1.0);
            let argmax: Vec<usize> = (0..*actions).filter(|&a| values[a] >= level).collect();
            let mut pick = argmax[0];
            for &a in &argmax {
                if current.get(a).copied().unwrap_or(0.0) > current.get(pick).copied().unwrap_or(0.0) {
                    pick = a;
                }
            }
            let strategy = pure_action(*actions, pick);
            Ok(if argmax.len() == 1 {
                BestResponse::point(strategy)
            } else {
                BestResponse {
                    strategy,
                    set: BrSet::Actions { actions: argmax },
                }
            })
        }
        StrategySet::Box { lo, hi } => {
            let d = lo.len();
            let mut x = set.clamp(current);
            let mut flats: Vec<Option<(f64, f64)>> = vec![None; d];
            let sweeps = if d == 1 { 1 } else { COORDINATE_SWEEPS };
            for _ in 0..sweeps {
                let mut moved = 0.0f64;
                for k in 0..d {
                    let base = x.clone();
                    let f = |v: f64| {
                        let mut y = base.clone();
                        y[k] = v;
                        objective(&y)
                    };
                    let (xk, flat) = maximize_interval(&f, lo[k], hi[k], current[k].clamp(lo[k], hi[k]), player)?;
                    moved = moved.max((xk - x[k]).abs());
                    x[k] = xk;
                    flats[k] = flat;
                }
                if moved <= GOLDEN_TOL {
                    break;
                }
            }
            if flats.iter().all(Option::is_none) {
                return Ok(BestResponse::point(x));
            }
            let lo_v: Vec<f64> = (0..d).map(|k| flats[k].map_or(x[k], |f| f.0)).collect();
            let hi_v: Vec<f64> = (0..d).map(|k| flats[k].map_or(x[k], |f| f.1)).collect();
            Ok(BestResponse {
                strategy: x,
                set: BrSet::Box { lo: lo_v, hi: hi_v },
            })
        }
    }
}

/// Numeric best response of player `i` under `belief`, ignoring any closed form.
pub fn best_response_numeric(
    game: &dyn GameModel,
    belief: &Belief,
    i: usize,
    q: &StrategyProfile,
) -> Result<BestResponse> {
    let objective = |x: &[f64]| expected_payoff(game, belief, &q.with_player(i, x.to_vec()), i);
    maximize(&objective, &game.strategy_sets()[i], q.player(i), i)
}

/// Numeric best response of player `i` to a point estimate of the parameter
/// vector (e.g. OLS coefficients).
pub fn best_response_to_params(
    game: &dyn GameModel,
    params: &[f64],
    i: usize,
    q: &StrategyProfile,
) -> Result<BestResponse> {
    let objective = |x: &[f64]| game.mean_payoff_at(params, &q.with_player(i, x.to_vec()), i);
    maximize(&objective, &game.strategy_sets()[i], q.player(i), i)
}

fn random_profile(game: &dyn GameModel, rng: &mut ChaCha8Rng) -> StrategyProfile {
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

/// Equilibria found by damped iterated best response from random starts,
/// clustered at tolerance 1e-6.
pub fn equilibrium_set_numeric(game: &dyn GameModel, belief: &Belief) -> Result<EquilibriumSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(EQ_SEED);
    let mut found: Vec<StrategyProfile> = Vec::new();
    for _ in 0..EQ_STARTS {
        let mut q = random_profile(game, &mut rng);
        for _ in 0..EQ_MAX_ITERATIONS {
            let mut next = q.clone();
            let mut residual = 0.0f64;
            for i in 0..game.n_players() {
                let br = super::best_response(game, belief, i, &q)?;
                let qi = q.player(i);
                residual = residual.max(br.distance_to_set(qi));
                let moved: Vec<f64> = qi
                    .iter()
                    .zip(&br.strategy)
                    .map(|(a, b)| a + EQ_DAMPING * (b - a))
                    .collect();
                next.set_player(i, moved);
            }
            if residual <= EQ_RESIDUAL_TOL {
                if !found.iter().any(|p| p.distance(&q) <= EQ_CLUSTER_TOL) {
                    found.push(q.clone());
                }
                break;
            }
            q = next;
        }
    }
    if found.is_empty() {
        return Err(Error::NoEquilibriumFound { starts: EQ_STARTS });
    }
    Ok(EquilibriumSet::FiniteList { points: found })
}
