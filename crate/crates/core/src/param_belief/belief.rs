//! Beliefs on the simplex `Δ(S)`, stored in log-space.
//!
//! A belief keeps its unnormalized log-weight split into two parts: the log
//! prior weight it was constructed with, and the log-likelihood accumulated by
//! Bayesian updates since then (shifted at each update so that the current
//! posterior mode gains exactly zero). Parameters whose likelihood histories
//! coincide therefore accumulate bit-identical values, which makes the ratio
//! `θ(s)/θ(s')` of payoff-equivalent parameters exactly invariant under updates.
//! Exact zeros are represented by a `-inf` log-weight and are permanent.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{contract, Error, Result};

/// Tolerance accepted on `Σ θ(s) = 1` for user-supplied probability vectors.
pub const INPUT_SUM_TOL: f64 = 1e-9;

/// A probability vector over the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    base: Vec<f64>,
    acc: Vec<f64>,
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

fn log_sum_exp(w: &[f64]) -> f64 {
    let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + w.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Belief {
    fn from_parts(base: Vec<f64>, acc: Vec<f64>) -> Result<Self> {
        Self::from_parts_with(base, acc, None)
    }

    /// `exact_probs` lets constructors from probabilities keep the caller's
    /// values instead of a round trip through logarithms.
    fn from_parts_with(base: Vec<f64>, acc: Vec<f64>, exact_probs: Option<Vec<f64>>) -> Result<Self> {
        let w: Vec<f64> = base.iter().zip(&acc).map(|(b, a)| b + a).collect();
        if w.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(contract("belief log-weights must be finite or -inf"));
        }
        let z = log_sum_exp(&w);
        if z == f64::NEG_INFINITY {
            return Err(contract("belief must put positive mass somewhere"));
        }
        let log_probs: Vec<f64> = w
            .iter()
            .map(|x| if *x == f64::NEG_INFINITY { *x } else { x - z })
            .collect();
        let probs = exact_probs.unwrap_or_else(|| log_probs.iter().map(|l| l.exp()).collect());
        Ok(Self {
            base,
            acc,
            log_probs,
            probs,
        })
    }

    /// Builds a belief from probabilities. Entries must be non-negative and sum
    /// to one within [`INPUT_SUM_TOL`]; the vector is renormalized exactly.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(contract("belief must have at least one entry"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(contract(format!(
                "belief entries must be finite and non-negative: {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > INPUT_SUM_TOL {
            return Err(contract(format!("belief sums to {total}, expected 1")));
        }
        let base = probs.iter().map(|p| p.ln()).collect::<Vec<_>>();
        let exact = probs.iter().map(|p| p / total).collect();
        Self::from_parts_with(base, vec![0.0; probs.len()], Some(exact))
    }

    /// Builds a belief from unnormalized log-weights (`-inf` marks exact zeros).
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(contract("belief must have at least one entry"));
        }
        Self::from_parts(log_weights.to_vec(), vec![0.0; log_weights.len()])
    }

    /// The uniform belief over `n` parameters.
    pub fn uniform(n: usize) -> Self {
        Self::from_log_weights(&vec![0.0; n.max(1)]).expect("uniform belief is valid")
    }

    /// The point mass on parameter `idx` (e.g. the complete-information belief `θ*`).
    pub fn point_mass(n: usize, idx: usize) -> Result<Self> {
        if idx >= n {
            return Err(contract(format!("index {idx} out of range for {n} parameters")));
        }
        let mut w = vec![f64::NEG_INFINITY; n];
        w[idx] = 0.0;
        Self::from_log_weights(&w)
    }

    /// Number of parameters.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// Always false: construction rejects empty beliefs.
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probabilities `θ(s)`. Entries whose log-probability is below the
    /// double-precision range read as `0.0` here while staying positive in
    /// [`Belief::log_probs`]; use [`Belief::support`] for exact support tests.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Normalized log-probabilities (canonical representation).
    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `θ(idx)`.
    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    /// True when parameter `idx` has been excluded exactly (`θ(idx) = 0`).
    pub fn is_excluded(&self, idx: usize) -> bool {
        self.log_probs[idx] == f64::NEG_INFINITY
    }

    /// The support `[θ] = {s : θ(s) > 0}` in increasing index order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_excluded(i)).collect()
    }

    /// True when every parameter has positive probability.
    pub fn has_full_support(&self) -> bool {
        (0..self.len()).all(|i| !self.is_excluded(i))
    }

    /// `log(θ(s)/θ(r))`, computed from the stored decomposition so that
    /// parameters with identical likelihood histories keep identical ratios.
    pub fn log_ratio(&self, s: usize, r: usize) -> f64 {
        (self.base[s] - self.base[r]) + (self.acc[s] - self.acc[r])
    }

    /// `θ(s)/θ(r)`.
    pub fn ratio(&self, s: usize, r: usize) -> f64 {
        self.log_ratio(s, r).exp()
    }

    /// The posterior mode; ties are broken by the lowest index.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.log_probs[i] > self.log_probs[best] {
                best = i;
            }
        }
        best
    }

    /// Euclidean distance between probability vectors.
    pub fn distance(&self, other: &Belief) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Multiplies the belief by the likelihoods `exp(log_lik[s])` and renormalizes.
    ///
    /// The increments are shifted by the log-likelihood of the posterior mode,
    /// so that parameters that tie with the mode keep their weights unchanged.
    pub(crate) fn apply_log_likelihood(&self, log_lik: &[f64]) -> Result<Belief> {
        if log_lik.len() != self.len() {
            return Err(contract(format!(
                "log-likelihood vector has length {} for a belief over {} parameters",
                log_lik.len(),
                self.len()
            )));
        }
        if log_lik.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(contract("log-likelihood must be finite or -inf"));
        }
        let mut reference: Option<usize> = None;
        let mut best = f64::NEG_INFINITY;
        for s in 0..self.len() {
            let post = self.log_probs[s] + log_lik[s];
            if post > best {
                best = post;
                reference = Some(s);
            }
        }
        let r = reference.ok_or(Error::ImpossibleObservation)?;
        let shift = log_lik[r];
        let acc = self
            .acc
            .iter()
            .zip(log_lik)
            .map(|(a, l)| {
                if *l == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    a + (l - shift)
                }
            })
            .collect();
        Self::from_parts(self.base.clone(), acc)
    }
}

impl Serialize for Belief {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.probs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Belief {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(deserializer)?;
        Belief::from_probs(&probs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_support() {
        let b = Belief::from_probs(&[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(b.support(), vec![0, 2]);
        assert!(b.is_excluded(1));
        assert_eq!(b.log_probs()[1], f64::NEG_INFINITY);
        assert!(!b.has_full_support());
        assert!(Belief::from_probs(&[0.5, 0.6]).is_err());
        assert!(Belief::from_probs(&[-0.1, 1.1]).is_err());
        let pm = Belief::point_mass(3, 2).unwrap();
        assert_eq!(pm.probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(Belief::uniform(4).prob(3), 0.25);
    }

    #[test]
    fn tiny_log_probabilities_survive_underflow() {
        let b = Belief::from_log_weights(&[0.0, -5000.0]).unwrap();
        assert_eq!(b.prob(1), 0.0);
        assert!(!b.is_excluded(1));
        assert_eq!(b.log_probs()[1], -5000.0);
    }

    #[test]
    fn mode_breaks_ties_by_lowest_index() {
        let b = Belief::from_probs(&[0.25, 0.375, 0.375]).unwrap();
        assert_eq!(b.mode(), 1);
    }

    #[test]
    fn all_zero_likelihood_is_impossible() {
        let b = Belief::uniform(2);
        let err = b
            .apply_log_likelihood(&[f64::NEG_INFINITY, f64::NEG_INFINITY])
            .unwrap_err();
        assert_eq!(err, Error::ImpossibleObservation);
    }

    #[test]
    fn json_round_trip_uses_probabilities() {
        let b = Belief::from_probs(&[0.25, 0.75]).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(text, "[0.25,0.75]");
        let back: Belief = serde_json::from_str(&text).unwrap();
        assert_eq!(back.probs(), b.probs());
    }
}
