//! Sampled evidence for the local-stability conditions, Monte Carlo stay
//! probabilities, and the global-stability verdict.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fixed_points::{enumerate_fixed_points, FixedPointCertificate, FixedPointEnumeration, FixedPointTolerances};
use super::kl::{payoff_equivalent_set, DEFAULT_KL_TOL};
use super::sampling::{sample_belief_near, sample_strategy_near_set};
use super::thresholds::{doob_upcrossing_bound, stability_thresholds, StabilityThresholds};
use crate::dynamics::{random_belief, random_profile, replica_seed, run_replicas, run_with, Estimator, RunOptions, UpdateRule};
use crate::error::{Error, Result};
use crate::games::{best_response, equilibrium_set, EquilibriumSet, GameModel, StrategyProfile};
use crate::param_belief::{Belief, ScheduleKind};

/// Schema tag of serialized stability reports.
pub const REPORT_SCHEMA: &str = "beliefplay/report-v1";
/// Two-sided 95% standard normal quantile.
pub const WILSON_Z_95: f64 = 1.959963984540054;
/// Number of halvings of the neighborhood radius in the continuity test.
pub const CONTINUITY_RADII: usize = 8;
/// Final belief tolerance (sup norm) of the global-stability runs.
pub const GLOBAL_BELIEF_TOL: f64 = 0.05;
/// Final strategy-to-equilibrium tolerance of the global-stability runs.
pub const GLOBAL_STRATEGY_TOL: f64 = 0.02;
/// Cap on the number of extreme profiles of a best-response set.
const MAX_EXTREME_PROFILES: usize = 4096;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// A probe that violated a condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// The sampled belief, when the condition involves one.
    pub belief: Option<Vec<f64>>,
    /// The sampled strategy profile, when the condition involves one.
    pub strategy: Option<StrategyProfile>,
    /// The offending quantity (a distance, or the parameters outside `S*(q)`).
    pub detail: String,
}

/// Sampled evidence for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEvidence {
    /// No probe failed.
    pub holds: bool,
    pub probes: usize,
    pub failures: usize,
    /// The first failing probe.
    pub counterexample: Option<Counterexample>,
    /// Human-readable statement of what was checked.
    pub note: String,
}

/// Evidence that `EQ(θ)` approaches `EQ(θ̄)` as `θ → θ̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityEvidence {
    /// Radii `ε 2^{-k}`, decreasing.
    pub radii: Vec<f64>,
    /// `sup` over sampled `θ` with `‖θ − θ̄‖_∞ < r` of the excess of `EQ(θ)` over `EQ(θ̄)`.
    pub envelope: Vec<f64>,
    pub probes: usize,
    /// The envelope is non-increasing and shrinks at least tenfold.
    pub holds: bool,
    /// Largest sampled radius from which the envelope shrinks tenfold.
    pub largest_passing_radius: Option<f64>,
    pub note: String,
}

/// Evidence for the three local conditions at one fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption2Report {
    pub epsilon: f64,
    pub delta: f64,
    /// Upper hemicontinuity of `EQ(·)` at `θ̄`.
    pub a2a: ContinuityEvidence,
    /// `BR(θ, q) ⊆ N_δ(EQ(θ̄))` for `θ ∈ N_ε(θ̄)`, `q ∈ N_δ(EQ(θ̄))`.
    pub a2b: ConditionEvidence,
    /// `[θ̄] ⊆ S*(q)` for `q ∈ N_δ(EQ(θ̄))`.
    pub a2c: ConditionEvidence,
    pub all_pass: bool,
}

fn certified_belief(certificate: &FixedPointCertificate) -> Result<Belief> {
    if !certificate.valid {
        return Err(Error::Precondition("certificate is not a valid fixed point".into()));
    }
    Belief::from_probs(&certificate.belief)
}

fn draw_belief(center: &[f64], radius: f64, full_support: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if radius == 0.0 {
        center.to_vec()
    } else {
        sample_belief_near(center, radius, full_support, rng)
    }
}

fn draw_strategy(game: &dyn GameModel, eq: &EquilibriumSet, radius: f64, rng: &mut ChaCha8Rng) -> StrategyProfile {
    if radius == 0.0 {
        eq.sample_members(1, rng).remove(0)
    } else {
        sample_strategy_near_set(game, eq, radius, rng)
    }
}

/// All profiles built from extreme points of every player's best response.
fn extreme_best_response_profiles(game: &dyn GameModel, belief: &Belief, q: &StrategyProfile) -> Result<Vec<StrategyProfile>> {
    let mut profiles = vec![q.clone()];
    for i in 0..game.n_players() {
        let extremes = best_response(game, belief, i, q)?.extreme_points();
        let mut next = Vec::with_capacity(profiles.len() * extremes.len());
        for p in &profiles {
            for e in &extremes {
                next.push(p.with_player(i, e.clone()));
                if next.len() >= MAX_EXTREME_PROFILES {
                    break;
                }
            }
        }
        profiles = next;
    }
    Ok(profiles)
}

/// Probes the three local conditions at a certified fixed point with
/// `n_probe` samples per condition. The evidence is sampled, never a proof.
pub fn check_assumption2(
    game: &dyn GameModel,
    certificate: &FixedPointCertificate,
    epsilon: f64,
    delta: f64,
    n_probe: usize,
    seed: u64,
) -> Result<Assumption2Report> {
    let bar = certified_belief(certificate)?;
    if !(epsilon > 0.0) || !(delta > 0.0) || n_probe == 0 {
        return Err(Error::Precondition("radii must be positive and n_probe non-zero".into()));
    }
    let eq_bar = equilibrium_set(game, &bar)?;
    let center = bar.probs().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // (A2a): one-sided excess of EQ(θ) over EQ(θ̄) on shrinking neighborhoods.
    let radii: Vec<f64> = (0..CONTINUITY_RADII).map(|k| epsilon * 0.5f64.powi(k as i32)).collect();
    let per_radius = n_probe.div_ceil(CONTINUITY_RADII);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(per_radius * CONTINUITY_RADII);
    for &r in &radii {
        for _ in 0..per_radius {
            let theta = sample_belief_near(&center, r, false, &mut rng);
            let dist = theta.iter().zip(&center).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let eq = equilibrium_set(game, &Belief::from_probs(&theta)?)?;
            samples.push((dist, eq.excess(&eq_bar)));
        }
    }
    let envelope: Vec<f64> = radii
        .iter()
        .map(|&r| samples.iter().filter(|(d, _)| *d < r).map(|(_, e)| *e).fold(0.0, f64::max))
        .collect();
    let last = envelope[CONTINUITY_RADII - 1];
    let monotone = envelope.windows(2).all(|w| w[1] <= w[0]);
    let shrinks = |first: f64| last <= 0.1 * first + 1e-9;
    let largest_passing_radius = radii.iter().zip(&envelope).find(|(_, e)| shrinks(**e)).map(|(r, _)| *r);
    let a2a = ContinuityEvidence {
        holds: monotone && shrinks(envelope[0]),
        note: format!(
            "sampled evidence: no counterexample in {} probes means the envelope shrank from {:.3e} to {:.3e}",
            samples.len(),
            envelope[0],
            last
        ),
        probes: samples.len(),
        radii,
        envelope,
        largest_passing_radius,
    };

    // (A2b): local invariance under the best-response correspondence.
    let mut b_fail = 0;
    let mut b_example = None;
    for _ in 0..n_probe {
        let theta = Belief::from_probs(&sample_belief_near(&center, epsilon, false, &mut rng))?;
        let q = sample_strategy_near_set(game, &eq_bar, delta, &mut rng);
        let worst = extreme_best_response_profiles(game, &theta, &q)?
            .iter()
            .map(|p| eq_bar.distance(p))
            .fold(0.0, f64::max);
        if worst >= delta {
            b_fail += 1;
            b_example.get_or_insert_with(|| Counterexample {
                belief: Some(theta.probs().to_vec()),
                strategy: Some(q.clone()),
                detail: format!("best response at distance {worst:.6e} from EQ(θ̄)"),
            });
        }
    }
    let a2b = ConditionEvidence {
        holds: b_fail == 0,
        probes: n_probe,
        failures: b_fail,
        counterexample: b_example,
        note: format!("BR(θ, q) ⊆ N_δ(EQ(θ̄)) checked on {n_probe} sampled (θ, q)"),
    };

    // (A2c): the support stays payoff-equivalent to the truth near EQ(θ̄).
    let support = bar.support();
    let mut c_fail = 0;
    let mut c_example = None;
    for _ in 0..n_probe {
        let q = sample_strategy_near_set(game, &eq_bar, delta, &mut rng);
        let eq_set = payoff_equivalent_set(game, &q, DEFAULT_KL_TOL);
        let missing: Vec<usize> = support.iter().copied().filter(|s| !eq_set.contains(s)).collect();
        if !missing.is_empty() {
            c_fail += 1;
            c_example.get_or_insert_with(|| Counterexample {
                belief: None,
                strategy: Some(q.clone()),
                detail: format!("parameters {missing:?} are distinguishable from the truth"),
            });
        }
    }
    let a2c = ConditionEvidence {
        holds: c_fail == 0,
        probes: n_probe,
        failures: c_fail,
        counterexample: c_example,
        note: format!("[θ̄] ⊆ S*(q) checked on {n_probe} sampled q"),
    };

    Ok(Assumption2Report {
        epsilon,
        delta,
        all_pass: a2a.holds && a2b.holds && a2c.holds,
        a2a,
        a2b,
        a2c,
    })
}

/// Protocol of [`monte_carlo_local_stability`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStabilityParams {
    /// Initial belief radius `ε¹` (sup norm).
    pub eps1: f64,
    /// Initial strategy radius `δ¹` around `EQ(θ̄)`.
    pub delta1: f64,
    /// Final belief radius `ε̄` (sup norm).
    pub eps_bar: f64,
    /// Final strategy radius `ε_x` around `EQ(θ̄)`.
    pub eps_x: f64,
    pub n_runs: usize,
    pub horizon: u64,
    pub seed: u64,
    pub rule: UpdateRule,
    pub schedule: ScheduleKind,
    pub estimator: Estimator,
}

impl LocalStabilityParams {
    /// Simultaneous best responses with every-stage Bayesian updates.
    pub fn new(eps1: f64, delta1: f64, eps_bar: f64, eps_x: f64, n_runs: usize, horizon: u64, seed: u64) -> Self {
        Self {
            eps1,
            delta1,
            eps_bar,
            eps_x,
            n_runs,
            horizon,
            seed,
            rule: UpdateRule::Simultaneous,
            schedule: ScheduleKind::EveryStage,
            estimator: Estimator::Bayes,
        }
    }
}

/// Monte Carlo estimate of the probability of staying near a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStabilityEstimate {
    pub n_runs: usize,
    pub stays: usize,
    pub stay_probability: f64,
    pub escape_probability: f64,
    /// Wilson 95% interval for the stay probability.
    pub stay_ci: (f64, f64),
    /// Wilson 95% interval for the escape probability.
    pub escape_ci: (f64, f64),
}

/// Runs `n_runs` trajectories from beliefs uniform in `N_{ε¹}(θ̄)` (full
/// support enforced unless `ε¹ = 0`) and strategies in `N_{δ¹}(EQ(θ̄))`, and
/// counts the runs whose final state lies in `N_{ε̄}(θ̄) × N_{ε_x}(EQ(θ̄))`.
pub fn monte_carlo_local_stability(
    game: &dyn GameModel,
    certificate: &FixedPointCertificate,
    params: &LocalStabilityParams,
) -> Result<LocalStabilityEstimate> {
    let bar = certified_belief(certificate)?;
    let eq_bar = equilibrium_set(game, &bar)?;
    let center = bar.probs().to_vec();
    let options = RunOptions {
        estimator: params.estimator,
        allow_partial_support: params.eps1 == 0.0,
        record_stages: false,
        ..RunOptions::default()
    };
    let outcomes = run_replicas(params.seed, params.n_runs, |_, seed| -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = Belief::from_probs(&draw_belief(&center, params.eps1, true, &mut rng))?;
        let q = draw_strategy(game, &eq_bar, params.delta1, &mut rng);
        let traj = run_with(game, &params.rule, params.schedule.clone(), (theta, q), params.horizon, seed, &options)?;
        let s = &traj.summary;
        let belief_dist = s
            .final_belief
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(belief_dist < params.eps_bar && eq_bar.distance(&s.final_strategy) < params.eps_x)
    });
    let mut stays = 0;
    for o in outcomes {
        if o? {
            stays += 1;
        }
    }
    let n = params.n_runs;
    let stay_ci = wilson_interval(stays, n, WILSON_Z_95);
    let p = if n == 0 { 0.0 } else { stays as f64 / n as f64 };
    Ok(LocalStabilityEstimate {
        n_runs: n,
        stays,
        stay_probability: p,
        escape_probability: 1.0 - p,
        stay_ci,
        escape_ci: (1.0 - stay_ci.1, 1.0 - stay_ci.0),
    })
}

/// Overall reading of the local-stability evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    /// The conditions passed and the stay probability is confidently at least `γ`.
    LocallyStableEvidence,
    /// The stay probability is confidently below `γ`.
    UnstableEvidence,
    Inconclusive,
}

/// Combines the condition checks and the Monte Carlo estimate at confidence level `γ`.
pub fn stability_verdict(a2: &Assumption2Report, local: &LocalStabilityEstimate, gamma: f64) -> StabilityVerdict {
    if local.stay_ci.1 < gamma {
        StabilityVerdict::UnstableEvidence
    } else if a2.all_pass && local.stay_ci.0 >= gamma {
        StabilityVerdict::LocallyStableEvidence
    } else {
        StabilityVerdict::Inconclusive
    }
}

/// A complete local-stability report for one fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Always [`REPORT_SCHEMA`].
    pub schema: String,
    pub game: String,
    /// Cluster id of the examined fixed point, when known.
    pub cluster: Option<String>,
    pub certificate: FixedPointCertificate,
    pub assumption2: Assumption2Report,
    pub thresholds: StabilityThresholds,
    /// Upper bound on the probability that an excluded parameter's ratio upcrosses `[ρ1/α, ρ2]`.
    pub upcrossing_bound: f64,
    pub local: LocalStabilityEstimate,
    pub verdict: StabilityVerdict,
}

/// Settings of [`stability_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReportParams {
    pub epsilon: f64,
    pub delta: f64,
    pub n_probe: usize,
    pub epsilon_hat: f64,
    pub gamma: f64,
    pub local: LocalStabilityParams,
}

/// Runs every local-stability check at one fixed point.
pub fn stability_report(
    game: &dyn GameModel,
    certificate: &FixedPointCertificate,
    cluster: Option<String>,
    params: &StabilityReportParams,
) -> Result<StabilityReport> {
    let assumption2 = check_assumption2(
        game,
        certificate,
        params.epsilon,
        params.delta,
        params.n_probe,
        params.local.seed,
    )?;
    let thresholds = stability_thresholds(&certificate.belief, params.epsilon_hat, params.gamma)?;
    let upcrossing_bound = doob_upcrossing_bound(&thresholds, certificate.belief[game.space().true_index()]);
    let local = monte_carlo_local_stability(game, certificate, &params.local)?;
    let verdict = stability_verdict(&assumption2, &local, params.gamma);
    Ok(StabilityReport {
        schema: REPORT_SCHEMA.to_string(),
        game: game.id().to_string(),
        cluster,
        certificate: certificate.clone(),
        assumption2,
        thresholds,
        upcrossing_bound,
        local,
        verdict,
    })
}

/// Protocol of [`check_global_stability_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStabilityParams {
    pub n_starts: usize,
    pub horizon: u64,
    pub seed: u64,
    pub rule: UpdateRule,
    pub schedule: ScheduleKind,
    pub estimator: Estimator,
}

/// Outcome of the global-stability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStabilityReport {
    /// The complete-information fixed point is the only one and every
    /// random start converged to it.
    pub globally_stable: bool,
    /// A fixed point with an incorrect belief, which rules out global stability.
    pub witness: Option<FixedPointCertificate>,
    pub witness_cluster: Option<String>,
    /// Random starts simulated (0 when a witness exists).
    pub runs: usize,
    /// Runs ending within the tolerances of `(θ*, EQ(θ*))`.
    pub converged_runs: usize,
    /// Seeds of the runs that did not converge.
    pub failed_seeds: Vec<u64>,
}

/// Global stability with simultaneous best responses and every-stage updates.
pub fn check_global_stability(game: &dyn GameModel, n_starts: usize, horizon: u64, seed: u64) -> Result<GlobalStabilityReport> {
    let enumeration = enumerate_fixed_points(game, 51, 11, FixedPointTolerances::default())?;
    let params = GlobalStabilityParams {
        n_starts,
        horizon,
        seed,
        rule: UpdateRule::Simultaneous,
        schedule: ScheduleKind::EveryStage,
        estimator: Estimator::Bayes,
    };
    check_global_stability_with(game, &enumeration, &params)
}

/// If the enumeration contains a fixed point with an incorrect belief, no
/// fixed point is globally stable and that point is the witness. Otherwise
/// `n_starts` random starts must all end with `‖θ − θ*‖_∞ < 0.05` and
/// `q` within `0.02` of `EQ(θ*)`.
pub fn check_global_stability_with(
    game: &dyn GameModel,
    enumeration: &FixedPointEnumeration,
    params: &GlobalStabilityParams,
) -> Result<GlobalStabilityReport> {
    if let Some(cluster) = enumeration.clusters.iter().find(|c| !c.is_complete_info) {
        return Ok(GlobalStabilityReport {
            globally_stable: false,
            witness: Some(cluster.representative.clone()),
            witness_cluster: Some(cluster.id.clone()),
            runs: 0,
            converged_runs: 0,
            failed_seeds: Vec::new(),
        });
    }
    let n = game.space().len();
    let truth = game.space().true_index();
    let star = Belief::point_mass(n, truth)?;
    let eq_star = equilibrium_set(game, &star)?;
    let options = RunOptions {
        estimator: params.estimator,
        record_stages: false,
        ..RunOptions::default()
    };
    let outcomes = run_replicas(params.seed, params.n_starts, |_, seed| -> Result<(u64, bool)> {
        let theta = random_belief(n, replica_seed(seed, 1))?;
        let q = random_profile(game, replica_seed(seed, 2));
        let traj = run_with(game, &params.rule, params.schedule.clone(), (theta, q), params.horizon, seed, &options)?;
        let s = &traj.summary;
        let belief_dist = s
            .final_belief
            .iter()
            .zip(star.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((seed, belief_dist < GLOBAL_BELIEF_TOL && eq_star.distance(&s.final_strategy) < GLOBAL_STRATEGY_TOL))
    });
    let mut converged = 0;
    let mut failed = Vec::new();
    for o in outcomes {
        let (seed, ok) = o?;
        if ok {
            converged += 1;
        } else {
            failed.push(seed);
        }
    }
    Ok(GlobalStabilityReport {
        globally_stable: !enumeration.clusters.is_empty() && failed.is_empty(),
        witness: None,
        witness_cluster: None,
        runs: params.n_starts,
        converged_runs: converged,
        failed_seeds: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::certify_fixed_point;
    use crate::games::Cournot;

    #[test]
    fn wilson_interval_brackets_the_proportion() {
        let (lo, hi) = wilson_interval(199, 200, WILSON_Z_95);
        assert!(lo > 0.97 && hi <= 1.0 && lo < 0.995);
        let (lo, hi) = wilson_interval(0, 10, WILSON_Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.2 && hi < 0.35);
    }

    #[test]
    fn zero_radius_single_stage_always_stays() {
        let g = Cournot::new();
        let cert = certify_fixed_point(
            &g,
            &Belief::from_probs(&[0.5, 0.5]).unwrap(),
            &StrategyProfile::scalars(&[0.5, 0.5]),
            1e-9,
            1e-7,
        )
        .unwrap();
        let params = LocalStabilityParams::new(0.0, 0.0, 1e-9, 1e-9, 20, 1, 5);
        let est = monte_carlo_local_stability(&g, &cert, &params).unwrap();
        assert_eq!(est.stays, 20);
    }
}
