//! Analysis of the learning dynamics: divergences and payoff equivalence,
//! fixed points, stability thresholds and checks, and convergence rates.

mod fixed_points;
mod kl;
mod rate;
mod sampling;
mod stability;
mod thresholds;

pub use fixed_points::{
    belief_grid, certify_fixed_point, check_all_fixed_points_complete, check_complete_info_equilibrium_conditions,
    enumerate_fixed_points, CompleteInfoConditions, CompletenessCheck, FixedPointCertificate, FixedPointCluster,
    FixedPointEnumeration, FixedPointTolerances, DEFAULT_BELIEF_RESOLUTION, DEFAULT_EQ_TOL,
    DEFAULT_STRATEGY_RESOLUTION,
};
pub use kl::{channel_kl, kl_divergence, kl_divergence_mixed, payoff_equivalent_set, payoff_equivalent_set_mixed, DEFAULT_KL_TOL, SUPPORT_TOL};
pub use rate::{
    estimate_convergence_rate, fit_line, martingale_diagnostic, pooled_convergence_rate, predicted_rate,
    MartingaleDiagnostic, PooledRate, RateFit, RatioDiagnostic,
};
pub use sampling::{sample_belief_near, sample_strategy_near, sample_strategy_near_set, MAX_REJECTION_TRIES};
pub use stability::{
    check_assumption2, check_global_stability, check_global_stability_with, monte_carlo_local_stability,
    stability_report, stability_verdict, wilson_interval, Assumption2Report, ConditionEvidence, ContinuityEvidence,
    Counterexample, GlobalStabilityParams, GlobalStabilityReport, LocalStabilityEstimate, LocalStabilityParams,
    StabilityReport, StabilityReportParams, StabilityVerdict, CONTINUITY_RADII, GLOBAL_BELIEF_TOL,
    GLOBAL_STRATEGY_TOL, REPORT_SCHEMA, WILSON_Z_95,
};
pub use thresholds::{doob_upcrossing_bound, stability_thresholds, upcrossing_count, StabilityThresholds};
