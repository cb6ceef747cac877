//! Kullback–Leibler divergence between observation laws and payoff-equivalence sets.

use crate::games::{pure_action, Channel, GameModel, StrategyProfile};
use crate::param_belief::ATOM_TOL;

/// Default tolerance on the divergence for classifying parameters as payoff-equivalent.
pub const DEFAULT_KL_TOL: f64 = 1e-9;
/// Mixed-strategy entries at or below this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// `D_KL(N(μ_a, σ_a²) ‖ N(μ_b, σ_b²))`, with `+∞` when absolute continuity
/// fails (an atom against a density, or two distinct atoms).
pub fn channel_kl(a: &Channel, b: &Channel) -> f64 {
    match (a.sigma == 0.0, b.sigma == 0.0) {
        (true, true) => {
            if (a.mean - b.mean).abs() <= ATOM_TOL * (1.0 + a.mean.abs()) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        (true, false) | (false, true) => f64::INFINITY,
        (false, false) => {
            let d = a.mean - b.mean;
            (b.sigma / a.sigma).ln() + (a.sigma * a.sigma + d * d) / (2.0 * b.sigma * b.sigma) - 0.5
        }
    }
}

/// `D_KL(φ^{s_a}(·|q) ‖ φ^{s_b}(·|q))` summed over the independent observation
/// channels at the (pure) profile `q`.
pub fn kl_divergence(game: &dyn GameModel, s_a: usize, s_b: usize, q: &StrategyProfile) -> f64 {
    if s_a == s_b {
        return 0.0;
    }
    let a = game.channels(s_a, q);
    let b = game.channels(s_b, q);
    a.iter().zip(&b).map(|(x, y)| channel_kl(x, y)).sum::<f64>().max(0.0)
}

fn pure_equivalent_set(game: &dyn GameModel, q: &StrategyProfile, tol: f64) -> Vec<usize> {
    let truth = game.space().true_index();
    (0..game.space().len())
        .filter(|&s| s == truth || kl_divergence(game, truth, s, q) <= tol)
        .collect()
}

/// `S*(q) = {s : D_KL(φ^{s*}‖φ^s) ≤ tol}` at `q`. In finite games `q` may be
/// mixed, and the set is the one of [`payoff_equivalent_set_mixed`].
pub fn payoff_equivalent_set(game: &dyn GameModel, q: &StrategyProfile, tol: f64) -> Vec<usize> {
    if game.is_finite() {
        payoff_equivalent_set_mixed(game, q, tol)
    } else {
        pure_equivalent_set(game, q, tol)
    }
}

/// Parameters equivalent to the truth at every pure profile in the support of
/// the mixed profile `q` (entries above [`SUPPORT_TOL`]).
pub fn payoff_equivalent_set_mixed(game: &dyn GameModel, q: &StrategyProfile, tol: f64) -> Vec<usize> {
    let supports: Vec<Vec<usize>> = q
        .per_player()
        .iter()
        .map(|w| (0..w.len()).filter(|&a| w[a] > SUPPORT_TOL).collect())
        .collect();
    let mut keep: Vec<bool> = vec![true; game.space().len()];
    let mut idx = vec![0usize; supports.len()];
    if supports.iter().any(Vec::is_empty) {
        return pure_equivalent_set(game, q, tol);
    }
    loop {
        let pure = StrategyProfile::new(
            idx.iter()
                .enumerate()
                .map(|(i, &k)| pure_action(q.player(i).len(), supports[i][k]))
                .collect(),
        );
        let eq = pure_equivalent_set(game, &pure, tol);
        for (s, flag) in keep.iter_mut().enumerate() {
            if !eq.contains(&s) {
                *flag = false;
            }
        }
        // Odometer over the product of supports.
        let mut p = 0;
        loop {
            if p == idx.len() {
                return (0..keep.len()).filter(|&s| keep[s]).collect();
            }
            idx[p] += 1;
            if idx[p] < supports[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Expected divergence `Σ_a q(a) D_KL(φ^{s_a}(·|a) ‖ φ^{s_b}(·|a))` over the
/// pure profiles `a` drawn from the mixed profile `q` of a finite game.
pub fn kl_divergence_mixed(game: &dyn GameModel, s_a: usize, s_b: usize, q: &StrategyProfile) -> f64 {
    if s_a == s_b {
        return 0.0;
    }
    let supports: Vec<Vec<usize>> = q
        .per_player()
        .iter()
        .map(|w| (0..w.len()).filter(|&a| w[a] > SUPPORT_TOL).collect())
        .collect();
    if supports.iter().any(Vec::is_empty) {
        return kl_divergence(game, s_a, s_b, q);
    }
    let mut idx = vec![0usize; supports.len()];
    let mut total = 0.0;
    loop {
        let weight: f64 = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| q.player(i)[supports[i][k]])
            .product();
        let pure = StrategyProfile::new(
            idx.iter()
                .enumerate()
                .map(|(i, &k)| pure_action(q.player(i).len(), supports[i][k]))
                .collect(),
        );
        let d = kl_divergence(game, s_a, s_b, &pure);
        if d > 0.0 {
            total += weight * d;
        }
        let mut p = 0;
        loop {
            if p == idx.len() {
                return total;
            }
            idx[p] += 1;
            if idx[p] < supports[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}
