//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the learning, game and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller violated a documented precondition (dimensions, ranges, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Every parameter assigns zero density to an observed record.
    #[error("impossible observation: every parameter assigns zero likelihood to the batch (model misspecified?)")]
    ImpossibleObservation,

    /// The OLS design matrix does not identify the coefficients.
    #[error("unidentifiable design (reciprocal condition number {rcond:.3e}); null directions: {null_directions:?}")]
    Unidentifiable {
        rcond: f64,
        null_directions: Vec<Vec<f64>>,
    },

    /// The numeric best-response solver did not reach its tolerance.
    #[error("best-response solver did not converge for player {player}; last bracket [{lo}, {hi}]")]
    Solver { player: usize, lo: f64, hi: f64 },

    /// Damped best-response iteration failed from every start.
    #[error("no equilibrium found: damped best-response iteration failed from all {starts} starts")]
    NoEquilibriumFound { starts: usize },

    /// An initial state violates the full-support precondition of a run.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A configuration document failed validation.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    /// Filesystem failure while writing or reading artifacts.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
