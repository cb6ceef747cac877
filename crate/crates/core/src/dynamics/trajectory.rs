//! Trajectories, their summaries, convergence detection and CSV export.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::StageRecord;
use crate::games::StrategyProfile;

/// Default convergence window `W`.
pub const CONVERGENCE_WINDOW: usize = 500;
/// Default tolerance on strategy moves and belief drift.
pub const CONVERGENCE_TOL: f64 = 1e-5;
/// Longest strategy cycle reported by [`TrajectorySummary::cycle_period`].
pub const MAX_CYCLE_PERIOD: usize = 16;
/// Tolerance for recognizing exactly repeating strategies.
const CYCLE_TOL: f64 = 1e-12;

/// When a run is declared converged: over the last `window` stages every
/// strategy move is below `tol_q` and the belief moved less than `tol_theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriteria {
    pub window: usize,
    pub tol_q: f64,
    pub tol_theta: f64,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        Self {
            window: CONVERGENCE_WINDOW,
            tol_q: CONVERGENCE_TOL,
            tol_theta: CONVERGENCE_TOL,
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Streaming evaluation of the convergence criterion and of strategy cycles
/// over the states `(θ^1, q^1), (θ^2, q^2), …`.
#[derive(Debug, Clone)]
pub struct ConvergenceTracker {
    criteria: ConvergenceCriteria,
    count: u64,
    thetas: VecDeque<Vec<f64>>,
    strategies: VecDeque<Vec<f64>>,
    moves: VecDeque<f64>,
    holding_since: Option<u64>,
}

impl ConvergenceTracker {
    /// An empty tracker.
    pub fn new(criteria: ConvergenceCriteria) -> Self {
        Self {
            criteria,
            count: 0,
            thetas: VecDeque::new(),
            strategies: VecDeque::new(),
            moves: VecDeque::new(),
            holding_since: None,
        }
    }

    /// Feeds the state of the next stage.
    pub fn push(&mut self, theta: &[f64], q: &[f64]) {
        self.count += 1;
        let w = self.criteria.window;
        if let Some(prev) = self.strategies.back() {
            self.moves.push_back(euclid(prev, q));
            if self.moves.len() > w {
                self.moves.pop_front();
            }
        }
        self.thetas.push_back(theta.to_vec());
        if self.thetas.len() > w + 1 {
            self.thetas.pop_front();
        }
        self.strategies.push_back(q.to_vec());
        if self.strategies.len() > w + MAX_CYCLE_PERIOD {
            self.strategies.pop_front();
        }
        let holds = self.thetas.len() == w + 1
            && self.moves.len() == w
            && self.moves.iter().all(|m| *m < self.criteria.tol_q)
            && euclid(&self.thetas[0], &self.thetas[w]) < self.criteria.tol_theta;
        if holds {
            self.holding_since.get_or_insert(self.count);
        } else {
            self.holding_since = None;
        }
    }

    /// True when the criterion holds at the latest state.
    pub fn converged(&self) -> bool {
        self.holding_since.is_some()
    }

    /// Earliest stage from which the criterion holds through the latest state.
    pub fn stop_stage(&self) -> Option<u64> {
        self.holding_since
    }

    /// Smallest period `p ≥ 2` with which the recent strategies repeat exactly,
    /// if any (constant sequences have no cycle).
    pub fn cycle_period(&self) -> Option<usize> {
        let q: Vec<&Vec<f64>> = self.strategies.iter().collect();
        let len = q.len();
        let repeats = |p: usize| {
            let checked = (len - p).min(self.criteria.window);
            checked >= 2 * p && (len - checked..len).all(|u| euclid(q[u], q[u - p]) <= CYCLE_TOL)
        };
        if len < 4 || repeats(1) {
            return None;
        }
        (2..=MAX_CYCLE_PERIOD.min(len / 2)).find(|&p| repeats(p))
    }
}

/// Distance of the strategy to the equilibrium set of the current belief at an update stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDistance {
    pub stage: u64,
    pub distance: f64,
}

/// Terminal summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    /// Number of simulated stages `T`.
    pub horizon: u64,
    /// Seed of the run.
    pub seed: u64,
    /// Whether the convergence criterion holds at the final state.
    pub converged: bool,
    /// Earliest stage from which the criterion holds to the end.
    pub t_stop: Option<u64>,
    /// Period of an exactly repeating strategy cycle at the end of the run.
    pub cycle_period: Option<usize>,
    /// Final belief `θ^{T+1}`.
    pub final_belief: Vec<f64>,
    /// Final strategy profile `q^{T+1}`.
    pub final_strategy: StrategyProfile,
    /// Number of belief updates performed (excluding the prior at stage 1).
    pub updates: u64,
    /// Identifier of the nearest known fixed point, when one was supplied.
    pub nearest_fixed_point: Option<String>,
    /// Distance of the final state to that fixed point.
    pub fixed_point_distance: Option<f64>,
    /// Strategy-to-equilibrium distances at update stages (two-timescale runs).
    pub equilibrium_distances: Vec<EquilibriumDistance>,
}

/// A recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Per-stage records, contiguous from stage 1 (empty when recording was disabled).
    pub records: Vec<StageRecord>,
    /// Terminal summary.
    pub summary: TrajectorySummary,
}

/// Formats a float with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Trajectory {
    /// CSV export with columns `t, theta_*, q_*, c_*, updated`; `comment`
    /// lines are prefixed with `# `.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let Some(first) = self.records.first() else {
            out.push_str("t,updated\n");
            return out;
        };
        let mut header = vec!["t".to_string()];
        header.extend((0..first.theta.len()).map(|k| format!("theta_{k}")));
        header.extend((0..first.q.flat().len()).map(|k| format!("q_{k}")));
        header.extend((0..first.payoffs.len()).map(|k| format!("c_{k}")));
        header.push("updated".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            row.extend(r.theta.iter().map(|v| format_float(*v)));
            row.extend(r.q.flat().iter().map(|v| format_float(*v)));
            row.extend(r.payoffs.iter().map(|v| format_float(*v)));
            row.push(if r.updated { "1" } else { "0" }.into());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn criteria(window: usize) -> ConvergenceCriteria {
        ConvergenceCriteria {
            window,
            ..Default::default()
        }
    }

    #[test]
    fn constant_sequence_converges_after_one_window() {
        let mut tr = ConvergenceTracker::new(criteria(3));
        for t in 1..=10u64 {
            tr.push(&[1.0], &[0.5]);
            assert_eq!(tr.converged(), t >= 4);
        }
        assert_eq!(tr.stop_stage(), Some(4));
        assert_eq!(tr.cycle_period(), None);
    }

    #[test]
    fn late_move_resets_the_stop_stage() {
        let mut tr = ConvergenceTracker::new(criteria(2));
        for t in 1..=10 {
            tr.push(&[0.0], &[if t == 6 { 1.0 } else { 0.0 }]);
        }
        // Moves at 6 and 7 leave windows (8, 9] onward clean.
        assert_eq!(tr.stop_stage(), Some(9));
    }

    #[test]
    fn period_two_cycle_is_detected() {
        let mut tr = ConvergenceTracker::new(criteria(10));
        for t in 0..40 {
            tr.push(&[0.5], &[(t % 2) as f64]);
        }
        assert!(!tr.converged());
        assert_eq!(tr.cycle_period(), Some(2));
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(1.0 / 3.0), "3.3333333333333331e-1");
    }
}
