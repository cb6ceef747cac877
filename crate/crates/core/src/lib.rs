//! Learning with misspecified-or-not beliefs over a finite set of payoff
//! parameters in repeated games.
//!
//! Players share a belief over candidate parameters, best-respond to it,
//! observe noisy payoffs, and update the belief (by Bayes' rule, a MAP point
//! estimate, or least squares) on a configurable schedule. The crate offers the
//! game models, the learning dynamics, and the analysis of fixed points,
//! stability thresholds and convergence rates.

pub mod error;
pub mod analysis;
pub mod dynamics;
pub mod experiment;
pub mod games;
pub mod param_belief;

pub use error::{Error, Result};
