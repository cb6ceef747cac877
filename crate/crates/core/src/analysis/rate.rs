//! Exponential decay rates of excluded parameters and martingale diagnostics
//! of the belief ratio process.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kl::{kl_divergence, kl_divergence_mixed};
use crate::dynamics::{sample_pure_profile, Trajectory};
use crate::error::{Error, Result};
use crate::games::{sample_observation, GameModel, StrategyProfile};
use crate::param_belief::{bayes_update, Belief, ObservationBatch};

/// Least-squares fit of `log θ^t(s) ≈ intercept + slope · t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Estimated decay rate (negative when `θ(s)` vanishes).
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r_squared: f64,
    /// Number of stages used.
    pub points: usize,
    /// The series was cut where `log θ^t(s)` became `−∞`.
    pub truncated: bool,
}

struct Moments {
    n: f64,
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

fn moments(xs: &[f64], ys: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    Moments {
        n,
        mean_x,
        mean_y,
        sxx,
        sxy,
        syy,
    }
}

/// Ordinary least-squares line through `(xs, ys)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Precondition("a line fit needs at least two points".into()));
    }
    let m = moments(xs, ys);
    if m.sxx == 0.0 {
        return Err(Error::Precondition("a line fit needs two distinct abscissae".into()));
    }
    let slope = m.sxy / m.sxx;
    let ss_res = (m.syy - slope * m.sxy).max(0.0);
    let r_squared = if m.syy == 0.0 { 1.0 } else { 1.0 - ss_res / m.syy };
    Ok(RateFit {
        slope,
        intercept: m.mean_y - slope * m.mean_x,
        r_squared,
        points: m.n as usize,
        truncated: false,
    })
}

/// The points `(t, log θ^t(s))` for `t > burn_in`, cut at the first `−∞`.
fn log_series(traj: &Trajectory, s: usize, burn_in: u64) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut truncated = false;
    for r in traj.records.iter().filter(|r| r.t > burn_in) {
        let y = *r
            .log_theta
            .get(s)
            .ok_or_else(|| Error::Precondition(format!("parameter index {s} is out of range")))?;
        if y == f64::NEG_INFINITY {
            truncated = true;
            warn!("log θ({s}) reached −∞ at stage {}; rate fit truncated", r.t);
            break;
        }
        xs.push(r.t as f64);
        ys.push(y);
    }
    Ok((xs, ys, truncated))
}

/// Fits the decay rate of `θ^t(s)` on the stages after `burn_in`.
pub fn estimate_convergence_rate(traj: &Trajectory, s: usize, burn_in: u64) -> Result<RateFit> {
    let (xs, ys, truncated) = log_series(traj, s, burn_in)?;
    let mut fit = fit_line(&xs, &ys)?;
    fit.truncated = truncated;
    Ok(fit)
}

/// Rate estimate pooled over replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledRate {
    /// Common slope of the fixed-effects regression (one intercept per run).
    pub slope: f64,
    /// Standard error of the pooled slope across runs.
    pub std_error: f64,
    /// Per-run fits.
    pub runs: Vec<RateFit>,
}

/// Fixed-effects slope `Σ_k S_xy^k / Σ_k S_xx^k` over several runs.
pub fn pooled_convergence_rate(trajectories: &[Trajectory], s: usize, burn_in: u64) -> Result<PooledRate> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut runs = Vec::with_capacity(trajectories.len());
    for traj in trajectories {
        let (xs, ys, truncated) = log_series(traj, s, burn_in)?;
        let m = moments(&xs, &ys);
        if xs.len() >= 2 && m.sxx > 0.0 {
            sxx += m.sxx;
            sxy += m.sxy;
            let mut fit = fit_line(&xs, &ys)?;
            fit.truncated = truncated;
            runs.push(fit);
        }
    }
    if runs.is_empty() || sxx == 0.0 {
        return Err(Error::Precondition("no run has two usable stages".into()));
    }
    let slope = sxy / sxx;
    let k = runs.len() as f64;
    let std_error = if runs.len() > 1 {
        let mean = runs.iter().map(|f| f.slope).sum::<f64>() / k;
        (runs.iter().map(|f| (f.slope - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(PooledRate { slope, std_error, runs })
}

/// The predicted decay rate of `θ^t(s)` while the play stays at `q`:
/// `−D_KL(φ^{s*}(·|q) ‖ φ^s(·|q))`, averaged over the pure plays of a mixed
/// profile in finite games.
pub fn predicted_rate(game: &dyn GameModel, s: usize, q: &StrategyProfile) -> f64 {
    let truth = game.space().true_index();
    if game.is_finite() {
        -kl_divergence_mixed(game, truth, s, q)
    } else {
        -kl_divergence(game, truth, s, q)
    }
}

/// Monte Carlo check of `E[θ^{t+1}(s)/θ^{t+1}(s*) | θ^t, q^t] = θ^t(s)/θ^t(s*)`
/// for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostic {
    pub param: usize,
    pub prior_ratio: f64,
    pub mean_ratio: f64,
    pub std_error: f64,
    /// `(mean − prior) / std_error` (0 when both agree exactly).
    pub z_score: f64,
}

/// Result of [`martingale_diagnostic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleDiagnostic {
    /// Number of simulated one-step updates.
    pub samples: usize,
    /// Ratio checks for every non-true parameter in the support.
    pub ratios: Vec<RatioDiagnostic>,
    /// `θ^t(s*)`.
    pub prior_true: f64,
    /// Sample mean of `θ^{t+1}(s*)`.
    pub mean_true: f64,
    pub true_std_error: f64,
    /// Sample mean of `log θ^{t+1}(s*) − log θ^t(s*)`, non-negative in expectation.
    pub mean_log_true_increment: f64,
    pub log_true_std_error: f64,
}

impl MartingaleDiagnostic {
    /// Every ratio mean lies within `k` standard errors of its prior value,
    /// and neither `θ(s*)` nor `log θ(s*)` decreases by more than `k`
    /// standard errors.
    pub fn consistent(&self, k: f64) -> bool {
        self.ratios.iter().all(|r| r.z_score.abs() <= k)
            && self.mean_true - self.prior_true >= -k * self.true_std_error
            && self.mean_log_true_increment >= -k * self.log_true_std_error
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Simulates `samples` independent one-stage Bayesian updates of `belief` from
/// observations at `q` (pure plays drawn from `q` in finite games) and
/// compares the posterior ratios to their prior values.
pub fn martingale_diagnostic(
    game: &dyn GameModel,
    belief: &Belief,
    q: &StrategyProfile,
    samples: usize,
    seed: u64,
) -> Result<MartingaleDiagnostic> {
    let truth = game.space().true_index();
    if belief.is_excluded(truth) {
        return Err(Error::Precondition("the belief excludes the true parameter".into()));
    }
    if samples < 2 {
        return Err(Error::Precondition("the diagnostic needs at least two samples".into()));
    }
    let others: Vec<usize> = belief.support().into_iter().filter(|&s| s != truth).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratio_draws = vec![Vec::with_capacity(samples); others.len()];
    let mut true_draws = Vec::with_capacity(samples);
    let mut log_draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let play = if game.is_finite() {
            sample_pure_profile(game, q, &mut rng)
        } else {
            q.clone()
        };
        let obs = sample_observation(game, truth, &play, &mut rng);
        let mut batch = ObservationBatch::default();
        batch.push(play, obs.channels);
        let post = bayes_update(belief, &batch, game)?;
        for (k, &s) in others.iter().enumerate() {
            ratio_draws[k].push(post.ratio(s, truth));
        }
        true_draws.push(post.prob(truth));
        log_draws.push(post.log_probs()[truth] - belief.log_probs()[truth]);
    }
    let ratios = others
        .iter()
        .zip(&ratio_draws)
        .map(|(&s, draws)| {
            let prior_ratio = belief.ratio(s, truth);
            let (mean_ratio, std_error) = mean_and_se(draws);
            let diff = mean_ratio - prior_ratio;
            let z_score = if diff == 0.0 {
                0.0
            } else if std_error == 0.0 {
                diff.signum() * f64::INFINITY
            } else {
                diff / std_error
            };
            RatioDiagnostic {
                param: s,
                prior_ratio,
                mean_ratio,
                std_error,
                z_score,
            }
        })
        .collect();
    let (mean_true, true_std_error) = mean_and_se(&true_draws);
    let (mean_log_true_increment, log_true_std_error) = mean_and_se(&log_draws);
    Ok(MartingaleDiagnostic {
        samples,
        ratios,
        prior_true: belief.prob(truth),
        mean_true,
        true_std_error,
        mean_log_true_increment,
        log_true_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Cournot;

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cournot_prediction_at_the_true_equilibrium() {
        let g = Cournot::new();
        let q = StrategyProfile::scalars(&[2.0 / 3.0, 2.0 / 3.0]);
        assert!((predicted_rate(&g, 1, &q) + 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(predicted_rate(&g, 0, &q), 0.0);
    }

    #[test]
    fn cournot_ratio_is_a_martingale() {
        let g = Cournot::new();
        let b = Belief::from_probs(&[0.6, 0.4]).unwrap();
        let q = StrategyProfile::scalars(&[0.6, 0.7]);
        let d = martingale_diagnostic(&g, &b, &q, 20_000, 3).unwrap();
        assert!(d.consistent(3.0), "{d:?}");
        assert!(d.mean_log_true_increment > 0.0);
    }
}
