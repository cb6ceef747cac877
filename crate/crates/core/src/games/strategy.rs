//! Strategy sets and strategy profiles.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Feasibility tolerance used when checking that a strategy lies in its set.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// The strategy set `Q_i` of one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySet {
    /// A box `[lo, hi]` in `R^d` for a continuous strategy.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Mixed strategies over `actions` pure actions (the probability simplex).
    Simplex { actions: usize },
}

impl StrategySet {
    /// The one-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        StrategySet::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    /// Length of a strategy vector in this set.
    pub fn dim(&self) -> usize {
        match self {
            StrategySet::Box { lo, .. } => lo.len(),
            StrategySet::Simplex { actions } => *actions,
        }
    }

    /// True for finite action sets.
    pub fn is_finite(&self) -> bool {
        matches!(self, StrategySet::Simplex { .. })
    }

    /// Membership test with tolerance [`FEASIBILITY_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            StrategySet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - FEASIBILITY_TOL && *v <= h + FEASIBILITY_TOL),
            StrategySet::Simplex { .. } => {
                x.iter().all(|v| *v >= -FEASIBILITY_TOL)
                    && (x.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            }
        }
    }

    /// Euclidean projection onto a box; simplex points are returned unchanged.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        match self {
            StrategySet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            StrategySet::Simplex { .. } => x.to_vec(),
        }
    }

    /// Center of a box, or the uniform mixed strategy.
    pub fn center(&self) -> Vec<f64> {
        match self {
            StrategySet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            StrategySet::Simplex { actions } => vec![1.0 / *actions as f64; *actions],
        }
    }

    /// Euclidean diameter of the set.
    pub fn diameter(&self) -> f64 {
        match self {
            StrategySet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l).powi(2))
                .sum::<f64>()
                .sqrt(),
            StrategySet::Simplex { .. } => std::f64::consts::SQRT_2,
        }
    }
}

/// The one-hot vector selecting `action` out of `n` actions.
pub fn pure_action(n: usize, action: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[action] = 1.0;
    v
}

/// A strategy for every player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    per_player: Vec<Vec<f64>>,
}

impl StrategyProfile {
    /// Wraps per-player strategy vectors.
    pub fn new(per_player: Vec<Vec<f64>>) -> Self {
        Self { per_player }
    }

    /// A profile of one-dimensional strategies.
    pub fn scalars(values: &[f64]) -> Self {
        Self::new(values.iter().map(|v| vec![*v]).collect())
    }

    /// Rebuilds a profile from its concatenation and per-player dimensions.
    pub fn from_flat(flat: &[f64], dims: &[usize]) -> Result<Self> {
        if dims.iter().sum::<usize>() != flat.len() {
            return Err(contract(format!(
                "flat strategy of length {} does not match dimensions {dims:?}",
                flat.len()
            )));
        }
        let mut out = Vec::with_capacity(dims.len());
        let mut at = 0;
        for d in dims {
            out.push(flat[at..at + d].to_vec());
            at += d;
        }
        Ok(Self::new(out))
    }

    /// Number of players.
    pub fn n_players(&self) -> usize {
        self.per_player.len()
    }

    /// Strategy of player `i`.
    pub fn player(&self, i: usize) -> &[f64] {
        &self.per_player[i]
    }

    /// All strategies.
    pub fn per_player(&self) -> &[Vec<f64>] {
        &self.per_player
    }

    /// Per-player dimensions.
    pub fn dims(&self) -> Vec<usize> {
        self.per_player.iter().map(Vec::len).collect()
    }

    /// Concatenation of all strategies.
    pub fn flat(&self) -> Vec<f64> {
        self.per_player.iter().flatten().cloned().collect()
    }

    /// A copy with player `i`'s strategy replaced.
    pub fn with_player(&self, i: usize, q_i: Vec<f64>) -> Self {
        let mut out = self.clone();
        out.per_player[i] = q_i;
        out
    }

    /// Replaces player `i`'s strategy in place.
    pub fn set_player(&mut self, i: usize, q_i: Vec<f64>) {
        self.per_player[i] = q_i;
    }

    /// Euclidean distance between flattened profiles.
    pub fn distance(&self, other: &StrategyProfile) -> f64 {
        self.per_player
            .iter()
            .flatten()
            .zip(other.per_player.iter().flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip() {
        let q = StrategyProfile::new(vec![vec![1.0, 2.0], vec![3.0]]);
        assert_eq!(q.flat(), vec![1.0, 2.0, 3.0]);
        assert_eq!(StrategyProfile::from_flat(&q.flat(), &q.dims()).unwrap(), q);
        assert!(StrategyProfile::from_flat(&[1.0], &[2]).is_err());
    }

    #[test]
    fn set_membership() {
        let b = StrategySet::interval(0.0, 3.0);
        assert!(b.contains(&[3.0]));
        assert!(!b.contains(&[3.1]));
        assert_eq!(b.clamp(&[4.0]), vec![3.0]);
        let s = StrategySet::Simplex { actions: 2 };
        assert!(s.contains(&[0.25, 0.75]));
        assert!(!s.contains(&[0.5, 0.6]));
    }
}
