//! Running ordinary-least-squares estimation of affine payoff coefficients.
//!
//! Each record contributes a design row `(q, 1)` and one response per player;
//! the state keeps the Gram matrix `Σ (q,1)(q,1)ᵀ` and the cross-products
//! `Σ (q,1) c_i` so that solving is independent of the record count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::games::StrategyProfile;

/// Reciprocal condition numbers below this make the design unidentifiable.
pub const RCOND_THRESHOLD: f64 = 1e-10;

/// Accumulated least-squares data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsState {
    n_players: usize,
    design_rows: Vec<Vec<f64>>,
    response_columns: Vec<Vec<f64>>,
    normal_matrix: Vec<Vec<f64>>,
    cross_vectors: Vec<Vec<f64>>,
}

impl OlsState {
    /// An empty state for profiles of total dimension `strategy_dim` and
    /// `n_players` response columns.
    pub fn new(strategy_dim: usize, n_players: usize) -> Self {
        let p = strategy_dim + 1;
        Self {
            n_players,
            design_rows: Vec::new(),
            response_columns: vec![Vec::new(); n_players],
            normal_matrix: vec![vec![0.0; p]; p],
            cross_vectors: vec![vec![0.0; p]; n_players],
        }
    }

    /// Number of ingested records.
    pub fn rows(&self) -> usize {
        self.design_rows.len()
    }

    /// Design rows `(q, 1)`.
    pub fn design_rows(&self) -> &[Vec<f64>] {
        &self.design_rows
    }

    /// Response column of player `i`.
    pub fn response_column(&self, i: usize) -> &[f64] {
        &self.response_columns[i]
    }

    /// The Gram matrix `Σ (q,1)(q,1)ᵀ`.
    pub fn normal_matrix(&self) -> &[Vec<f64>] {
        &self.normal_matrix
    }

    /// The cross-product vector `Σ (q,1) c_i` of player `i`.
    pub fn cross_vector(&self, i: usize) -> &[f64] {
        &self.cross_vectors[i]
    }

    /// Adds one record in place.
    pub fn ingest(&mut self, q: &StrategyProfile, c: &[f64]) -> Result<()> {
        let mut row = q.flat();
        row.push(1.0);
        let p = self.normal_matrix.len();
        if row.len() != p {
            return Err(contract(format!(
                "profile of dimension {} for an OLS state of dimension {}",
                row.len() - 1,
                p - 1
            )));
        }
        if c.len() != self.n_players {
            return Err(contract(format!(
                "{} responses for {} players",
                c.len(),
                self.n_players
            )));
        }
        for a in 0..p {
            for b in 0..p {
                self.normal_matrix[a][b] += row[a] * row[b];
            }
        }
        for (i, ci) in c.iter().enumerate() {
            for a in 0..p {
                self.cross_vectors[i][a] += row[a] * ci;
            }
            self.response_columns[i].push(*ci);
        }
        self.design_rows.push(row);
        Ok(())
    }

    /// Least-squares coefficients `ŝ_i = (Q̃ᵀQ̃)⁻¹ Q̃ᵀ Y_i` for every player.
    pub fn solve(&self) -> Result<Vec<Vec<f64>>> {
        let p = self.normal_matrix.len();
        let g = DMatrix::from_fn(p, p, |a, b| self.normal_matrix[a][b]);
        let eig = SymmetricEigen::new(g.clone());
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let rcond = if lmax > 0.0 { (lmin / lmax).max(0.0) } else { 0.0 };
        if rcond < RCOND_THRESHOLD {
            let null_directions = (0..p)
                .filter(|&k| eig.eigenvalues[k] <= RCOND_THRESHOLD * lmax)
                .map(|k| eig.eigenvectors.column(k).iter().cloned().collect())
                .collect();
            return Err(Error::Unidentifiable {
                rcond,
                null_directions,
            });
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| contract("Gram matrix is not positive definite"))?;
        Ok(self
            .cross_vectors
            .iter()
            .map(|b| chol.solve(&DVector::from_column_slice(b)).iter().cloned().collect())
            .collect())
    }
}

/// Functional form of [`OlsState::ingest`].
pub fn ols_ingest(mut state: OlsState, q: &StrategyProfile, c: &[f64]) -> Result<OlsState> {
    state.ingest(q, c)?;
    Ok(state)
}

/// Functional form of [`OlsState::solve`].
pub fn ols_solve(state: &OlsState) -> Result<Vec<Vec<f64>>> {
    state.solve()
}
