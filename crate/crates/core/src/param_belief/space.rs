//! The finite parameter set `S` with its designated true parameter `s*`.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// A finite set of candidate parameter vectors, one of which generates the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    params: Vec<Vec<f64>>,
    true_index: usize,
    labels: Option<Vec<String>>,
}

impl ParameterSpace {
    /// Builds a parameter space, checking that the vectors are non-empty,
    /// share one dimension, are pairwise distinct, and that `true_index` is valid.
    pub fn new(params: Vec<Vec<f64>>, true_index: usize) -> Result<Self> {
        if params.is_empty() {
            return Err(contract("parameter space must be non-empty"));
        }
        let dim = params[0].len();
        if dim == 0 {
            return Err(contract("parameter vectors must have positive dimension"));
        }
        for (i, p) in params.iter().enumerate() {
            if p.len() != dim {
                return Err(contract(format!(
                    "parameter {i} has dimension {} but parameter 0 has {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(contract(format!("parameter {i} has a non-finite entry")));
            }
            for (j, q) in params.iter().enumerate().take(i) {
                if p == q {
                    return Err(contract(format!("parameters {j} and {i} are identical")));
                }
            }
        }
        if true_index >= params.len() {
            return Err(contract(format!(
                "true_index {true_index} out of range for {} parameters",
                params.len()
            )));
        }
        Ok(Self {
            params,
            true_index,
            labels: None,
        })
    }

    /// Attaches display names, one per parameter.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.params.len() {
            return Err(contract(format!(
                "{} labels given for {} parameters",
                labels.len(),
                self.params.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of candidate parameters `|S|`.
    pub fn len(&self) -> usize {
        self.params.len()
    }

    /// Always false: construction rejects empty sets.
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Dimension shared by every parameter vector.
    pub fn dim(&self) -> usize {
        self.params[0].len()
    }

    /// Index of the true parameter `s*`.
    pub fn true_index(&self) -> usize {
        self.true_index
    }

    /// The parameter vector at `idx`.
    pub fn param(&self, idx: usize) -> &[f64] {
        &self.params[idx]
    }

    /// All parameter vectors.
    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    /// Display name of parameter `idx` (`s{idx}` when no labels were attached).
    pub fn label(&self, idx: usize) -> String {
        match &self.labels {
            Some(l) => l[idx].clone(),
            None => format!("s{idx}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_spaces() {
        assert!(ParameterSpace::new(vec![], 0).is_err());
        assert!(ParameterSpace::new(vec![vec![1.0], vec![1.0, 2.0]], 0).is_err());
        assert!(ParameterSpace::new(vec![vec![1.0], vec![1.0]], 0).is_err());
        assert!(ParameterSpace::new(vec![vec![1.0], vec![2.0]], 2).is_err());
        let s = ParameterSpace::new(vec![vec![1.0], vec![2.0]], 1).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.true_index(), 1);
        assert_eq!(s.label(0), "s0");
    }
}
