//! Parameter spaces, beliefs on the simplex, the Bayesian / MAP / OLS
//! estimators, and belief-update schedules.

mod belief;
mod likelihood;
mod ols;
mod schedule;
mod space;

pub use belief::{Belief, INPUT_SUM_TOL};
pub use likelihood::{
    batch_log_likelihoods, bayes_update, channel_log_density, log_likelihood, map_update,
    record_log_likelihoods, ObservationBatch, ObservationRecord, ATOM_TOL,
};
pub use ols::{ols_ingest, ols_solve, OlsState, RCOND_THRESHOLD};
pub use schedule::{next_update_stage, GapFn, ScheduleKind, UpdateSchedule};
pub use space::ParameterSpace;
