//! Gaussian observation likelihoods and the Bayesian / MAP belief updates.

use serde::{Deserialize, Serialize};

use super::{Belief, ParameterSpace};
use crate::error::{contract, Result};
use crate::games::{Channel, GameModel, StrategyProfile};

/// Relative tolerance for matching an observation to a zero-variance atom.
pub const ATOM_TOL: f64 = 1e-12;

/// One stage of data: the realized play and the observed channel values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    /// The realized strategy profile (the pure action profile in finite games).
    pub q: StrategyProfile,
    /// Observed channel values (payoffs or their declared sufficient statistic).
    pub c: Vec<f64>,
}

/// The records collected between two consecutive update stages.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationBatch {
    records: Vec<ObservationRecord>,
}

impl ObservationBatch {
    /// Builds a batch; it must be non-empty to be used in an update.
    pub fn new(records: Vec<ObservationRecord>) -> Self {
        Self { records }
    }

    /// Appends a record.
    pub fn push(&mut self, q: StrategyProfile, c: Vec<f64>) {
        self.records.push(ObservationRecord { q, c });
    }

    /// The records in stage order.
    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    /// Number of records.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// True when no record has been collected.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Removes all records.
    pub fn clear(&mut self) {
        self.records.clear();
    }
}

fn is_atom_hit(ch: &Channel, c: f64) -> bool {
    (c - ch.mean).abs() <= ATOM_TOL * (1.0 + ch.mean.abs())
}

/// Gaussian log-density of one channel; a zero-variance channel has log-density
/// 0 on its atom and `-inf` elsewhere.
pub fn channel_log_density(ch: &Channel, c: f64) -> f64 {
    if ch.sigma == 0.0 {
        return if is_atom_hit(ch, c) { 0.0 } else { f64::NEG_INFINITY };
    }
    let z = (c - ch.mean) / ch.sigma;
    -0.5 * (2.0 * std::f64::consts::PI * ch.sigma * ch.sigma).ln() - 0.5 * z * z
}

fn check_dims(game: &dyn GameModel, q: &StrategyProfile, channels: usize, c: &[f64]) -> Result<()> {
    if q.n_players() != game.n_players() {
        return Err(contract(format!(
            "profile has {} players, game {} has {}",
            q.n_players(),
            game.id(),
            game.n_players()
        )));
    }
    if c.len() != channels {
        return Err(contract(format!(
            "observation has {} values but game {} observes {channels} channels at this play",
            c.len(),
            game.id()
        )));
    }
    Ok(())
}

/// `log φ^s(c | q)` for the parameter at `s_idx`.
pub fn log_likelihood(
    space: &ParameterSpace,
    s_idx: usize,
    game: &dyn GameModel,
    q: &StrategyProfile,
    c: &[f64],
) -> Result<f64> {
    if s_idx >= space.len() || space.len() != game.space().len() {
        return Err(contract(format!(
            "parameter index {s_idx} invalid for a space of {} (game has {})",
            space.len(),
            game.space().len()
        )));
    }
    let channels = game.channels(s_idx, q);
    check_dims(game, q, channels.len(), c)?;
    Ok(channels
        .iter()
        .zip(c)
        .map(|(ch, v)| channel_log_density(ch, *v))
        .sum())
}

/// Log-likelihood of one record under every parameter.
///
/// When some parameters put an atom on a channel value that was observed
/// exactly, parameters with a continuous density there have likelihood zero
/// relative to the atom (they give that single value probability zero).
pub fn record_log_likelihoods(game: &dyn GameModel, q: &StrategyProfile, c: &[f64]) -> Result<Vec<f64>> {
    let n = game.space().len();
    let per_param: Vec<Vec<Channel>> = (0..n).map(|s| game.channels(s, q)).collect();
    check_dims(game, q, per_param[0].len(), c)?;
    let mut out = vec![0.0; n];
    for (k, &value) in c.iter().enumerate() {
        let atom_hit = per_param
            .iter()
            .any(|chs| chs[k].sigma == 0.0 && is_atom_hit(&chs[k], value));
        for s in 0..n {
            let ch = &per_param[s][k];
            out[s] += if atom_hit && ch.sigma > 0.0 {
                f64::NEG_INFINITY
            } else {
                channel_log_density(ch, value)
            };
        }
    }
    Ok(out)
}

/// Accumulated log-likelihood of a batch under every parameter.
pub fn batch_log_likelihoods(game: &dyn GameModel, batch: &ObservationBatch) -> Result<Vec<f64>> {
    let mut total = vec![0.0; game.space().len()];
    for r in batch.records() {
        for (t, l) in total.iter_mut().zip(record_log_likelihoods(game, &r.q, &r.c)?) {
            *t += l;
        }
    }
    Ok(total)
}

/// Bayes' rule over a batch: `θ'(s) ∝ θ(s) Π_t φ^s(c^t | q^t)`, in log-space.
pub fn bayes_update(belief: &Belief, batch: &ObservationBatch, game: &dyn GameModel) -> Result<Belief> {
    if batch.is_empty() {
        return Err(contract("bayes_update needs a non-empty batch"));
    }
    if belief.len() != game.space().len() {
        return Err(contract(format!(
            "belief over {} parameters for a game with {}",
            belief.len(),
            game.space().len()
        )));
    }
    belief.apply_log_likelihood(&batch_log_likelihoods(game, batch)?)
}

/// The maximum a posteriori parameter after a batch (lowest index on ties).
pub fn map_update(
    space: &ParameterSpace,
    prior: &Belief,
    batch: &ObservationBatch,
    game: &dyn GameModel,
) -> Result<usize> {
    if space.len() != game.space().len() {
        return Err(contract("parameter space does not match the game"));
    }
    Ok(bayes_update(prior, batch, game)?.mode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{Cournot, TwoRouteCongestion};
    use crate::error::Error;

    #[test]
    fn gaussian_peak_and_one_sigma() {
        let ch = Channel { mean: 1.5, sigma: 2.0 };
        let peak = channel_log_density(&ch, 1.5);
        assert!((peak + 0.5 * (2.0 * std::f64::consts::PI * 4.0).ln()).abs() < 1e-15);
        assert!((channel_log_density(&ch, 3.5) - (peak - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn atoms_have_zero_log_density_on_and_minus_infinity_off() {
        let ch = Channel { mean: 2.0, sigma: 0.0 };
        assert_eq!(channel_log_density(&ch, 2.0), 0.0);
        assert_eq!(channel_log_density(&ch, 2.1), f64::NEG_INFINITY);
    }

    #[test]
    fn dimension_mismatch_is_a_contract_violation() {
        let g = Cournot::new();
        let q = StrategyProfile::scalars(&[0.5, 0.5]);
        assert!(matches!(
            log_likelihood(g.space(), 0, &g, &q, &[1.0, 2.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn noiseless_mismatch_excludes_parameters() {
        let g = TwoRouteCongestion::new(2).unwrap().with_sigma(vec![0.0, 0.0]).unwrap();
        let q = StrategyProfile::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let mut batch = ObservationBatch::default();
        batch.push(q, vec![3.0]);
        let post = bayes_update(&Belief::uniform(2), &batch, &g).unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0]);
        assert!(post.is_excluded(1));
    }
}
