//! Stability thresholds `ρ1, ρ2, ρ3`, the upcrossing bound on the belief
//! ratio process, and upcrossing counts of recorded series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The thresholds attached to a fixed-point belief `θ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityThresholds {
    /// Bound on the initial ratio `θ¹(s)/θ¹(s*)` of excluded parameters.
    pub rho1: f64,
    /// Level the ratio of an excluded parameter must not upcross to.
    pub rho2: f64,
    /// Radius of the belief neighborhood kept by the supported parameters.
    pub rho3: f64,
    /// The belief neighborhood radius `ε̂`.
    pub epsilon_hat: f64,
    /// The target confidence `γ`.
    pub gamma: f64,
    /// `|S|`.
    pub n_params: usize,
    /// `m = |S ∖ [θ̄]|`.
    pub n_excluded: usize,
    /// `θ̄` has full support, so `m = 0` and the thresholds carry no
    /// information about excluded parameters.
    pub degenerate: bool,
}

/// Computes `ρ1, ρ2, ρ3` for `θ̄` (a probability vector), `ε̂ ∈ (0, 1)`
/// and `γ ∈ (0, 1)`, with `m = |S ∖ [θ̄]|`:
///
/// - `ρ1 = min_{s∈[θ̄]} (1−γ) θ̄(s) ε̂ / ((1−γ+m)(m+1)|S| + (1−γ) ε̂)`
/// - `ρ2 = ε̂ / ((m+1)|S|)`
/// - `ρ3 = min_{s∈[θ̄]} min{(ε̂ − m|S|ρ2 θ̄(s)) / (|S| − m|S|ρ2), ε̂ / (|S| + m(θ̄(s)|S| + ε̂)), θ̄(s)}`
pub fn stability_thresholds(theta_bar: &[f64], epsilon_hat: f64, gamma: f64) -> Result<StabilityThresholds> {
    if !(epsilon_hat > 0.0 && epsilon_hat < 1.0) {
        return Err(Error::Precondition(format!("epsilon_hat = {epsilon_hat} is not in (0, 1)")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Precondition(format!("gamma = {gamma} is not in (0, 1)")));
    }
    if theta_bar.is_empty() || theta_bar.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Precondition("belief must be a non-empty probability vector".into()));
    }
    let n = theta_bar.len() as f64;
    let support: Vec<f64> = theta_bar.iter().copied().filter(|p| *p > 0.0).collect();
    if support.is_empty() {
        return Err(Error::Precondition("belief has empty support".into()));
    }
    let m_count = theta_bar.len() - support.len();
    let m = m_count as f64;
    let g = 1.0 - gamma;
    let rho2 = epsilon_hat / ((m + 1.0) * n);
    let rho1 = support
        .iter()
        .map(|p| g * p * epsilon_hat / ((g + m) * (m + 1.0) * n + g * epsilon_hat))
        .fold(f64::INFINITY, f64::min);
    let rho3 = support
        .iter()
        .map(|p| {
            let a = (epsilon_hat - m * n * rho2 * p) / (n - m * n * rho2);
            let b = epsilon_hat / (n + m * (p * n + epsilon_hat));
            a.min(b).min(*p)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(StabilityThresholds {
        rho1,
        rho2,
        rho3,
        epsilon_hat,
        gamma,
        n_params: theta_bar.len(),
        n_excluded: m_count,
        degenerate: m_count == 0,
    })
}

/// Upper bound on the probability that the ratio `θ^t(s)/θ^t(s*)` of an
/// excluded parameter ever climbs from below `ρ1/α` to above `ρ2`, where
/// `α = θ̄(s*) − ρ1` lower-bounds the initial weight of the truth:
/// `(ρ1/α) / (ρ2 − ρ1/α)`. Infinite when `ρ1/α ≥ ρ2`.
pub fn doob_upcrossing_bound(thresholds: &StabilityThresholds, theta_bar_true: f64) -> f64 {
    let alpha = theta_bar_true - thresholds.rho1;
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    let a = thresholds.rho1 / alpha;
    if a >= thresholds.rho2 {
        f64::INFINITY
    } else {
        a / (thresholds.rho2 - a)
    }
}

/// Number of completed upcrossings of `[lo, hi]`: passages from a value
/// `≤ lo` to a later value `≥ hi`.
pub fn upcrossing_count(series: &[f64], lo: f64, hi: f64) -> Result<usize> {
    if !(lo < hi) {
        return Err(Error::Precondition(format!("upcrossing band [{lo}, {hi}] is empty")));
    }
    let mut armed = false;
    let mut count = 0;
    for &x in series {
        if !armed && x <= lo {
            armed = true;
        } else if armed && x >= hi {
            count += 1;
            armed = false;
        }
    }
    Ok(count)
}
