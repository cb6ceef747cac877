//! Random beliefs and strategies in neighborhoods used by the stability checks.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::games::{EquilibriumSet, GameModel, StrategyProfile, StrategySet};

/// Rejection attempts before a neighborhood radius is halved.
pub const MAX_REJECTION_TRIES: usize = 100_000;

fn dirichlet_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

/// A belief drawn uniformly from `{θ ∈ Δ(S) : ‖θ − center‖_∞ < radius}`,
/// restricted to full support when `full_support` is set. The coordinate with
/// the largest center mass is the dependent one; the others are drawn
/// uniformly and the draw is rejected unless it lands in the slice. After
/// [`MAX_REJECTION_TRIES`] failures the radius is halved (with a warning).
pub fn sample_belief_near<R: Rng + ?Sized>(center: &[f64], radius: f64, full_support: bool, rng: &mut R) -> Vec<f64> {
    let n = center.len();
    let dep = (0..n)
        .max_by(|&a, &b| center[a].total_cmp(&center[b]))
        .expect("non-empty belief");
    let mut r = radius;
    loop {
        for _ in 0..MAX_REJECTION_TRIES {
            let mut x = vec![0.0; n];
            let mut ok = true;
            let mut rest = 0.0;
            for k in (0..n).filter(|&k| k != dep) {
                let lo = (center[k] - r).max(0.0);
                let hi = (center[k] + r).min(1.0);
                x[k] = rng.gen_range(lo..hi.max(lo + f64::MIN_POSITIVE));
                if (full_support && x[k] <= 0.0) || (x[k] - center[k]).abs() >= r {
                    ok = false;
                }
                rest += x[k];
            }
            x[dep] = 1.0 - rest;
            if ok && x[dep] > 0.0 && (x[dep] - center[dep]).abs() < r {
                return x;
            }
        }
        r *= 0.5;
        warn!("belief neighborhood of radius {radius} is hard to sample; shrinking to {r}");
    }
}

/// A strategy profile within Euclidean distance `radius` of `center`
/// (`radius = ∞` gives a draw from the whole strategy space). Box coordinates
/// are drawn uniformly from the clipped cube and rejected outside the ball;
/// mixed strategies move toward a Dirichlet(1) point by a random fraction.
pub fn sample_strategy_near<R: Rng + ?Sized>(
    game: &dyn GameModel,
    center: &StrategyProfile,
    radius: f64,
    rng: &mut R,
) -> StrategyProfile {
    let sets = game.strategy_sets();
    let mut r = radius;
    loop {
        for _ in 0..MAX_REJECTION_TRIES {
            let per_player: Vec<Vec<f64>> = sets
                .iter()
                .enumerate()
                .map(|(i, set)| {
                    let c = center.player(i);
                    match set {
                        StrategySet::Box { lo, hi } => c
                            .iter()
                            .zip(lo.iter().zip(hi))
                            .map(|(v, (l, h))| {
                                let a = (v - r).max(*l);
                                let b = (v + r).min(*h);
                                if b > a {
                                    rng.gen_range(a..=b)
                                } else {
                                    a
                                }
                            })
                            .collect(),
                        StrategySet::Simplex { actions } => {
                            let p = dirichlet_point(*actions, rng);
                            let d: f64 = p.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                            let w = rng.gen::<f64>() * if d > 0.0 { (r / d).min(1.0) } else { 1.0 };
                            c.iter().zip(&p).map(|(a, b)| a + w * (b - a)).collect()
                        }
                    }
                })
                .collect();
            let q = StrategyProfile::new(per_player);
            if !r.is_finite() || q.distance(center) < r {
                return q;
            }
        }
        r *= 0.5;
        warn!("strategy neighborhood of radius {radius} is hard to sample; shrinking to {r}");
    }
}

/// A strategy profile within Euclidean distance `radius` of the set `eq`:
/// a random member perturbed by [`sample_strategy_near`].
pub fn sample_strategy_near_set<R: Rng + ?Sized>(
    game: &dyn GameModel,
    eq: &EquilibriumSet,
    radius: f64,
    rng: &mut R,
) -> StrategyProfile {
    let mut seed_rng = ChaCha8Rng::from_rng(&mut *rng).expect("seeding never fails");
    let member = eq.sample_members(1, &mut seed_rng).remove(0);
    sample_strategy_near(game, &member, radius, rng)
}
