//! Belief-update schedules: the stages `k_1 < k_2 < …` at which the belief is
//! recomputed from the data collected since the previous update.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Gap function `g(t) = slope · t + intercept` of a two-timescale schedule,
/// where `t` is the index of the current update stage `k_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapFn {
    pub slope: u64,
    pub intercept: u64,
}

impl GapFn {
    /// `g(t) = slope · t + intercept`; the gap must be at least 1 for every `t ≥ 1`.
    pub fn affine(slope: u64, intercept: u64) -> Result<Self> {
        if slope + intercept == 0 {
            return Err(contract("two-timescale gap must be at least 1"));
        }
        Ok(Self { slope, intercept })
    }

    /// The gap after update `t`.
    pub fn gap(&self, t: u64) -> u64 {
        self.slope * t + self.intercept
    }

    /// True when gaps grow without bound, as the two-timescale analysis requires.
    pub fn is_unbounded(&self) -> bool {
        self.slope > 0
    }
}

/// How the spacing between update stages is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Update after every stage.
    EveryStage,
    /// Update every `batch` stages.
    FixedBatch { batch: u64 },
    /// Gaps drawn from a geometric law on `{1, 2, …}` with success probability `p`.
    Geometric { p: f64 },
    /// Gaps `g(t)` growing with the update index.
    TwoTimescale { gap: GapFn },
}

/// A schedule together with its counters: the last update stage `k_t` and its index `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateSchedule {
    kind: ScheduleKind,
    last_stage: u64,
    index: u64,
}

impl UpdateSchedule {
    /// A schedule whose first update stage is `k_1 = 1`.
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        Self::starting_at(kind, 1, 1)
    }

    /// A schedule positioned at update stage `k_index = stage`.
    pub fn starting_at(kind: ScheduleKind, stage: u64, index: u64) -> Result<Self> {
        match kind {
            ScheduleKind::FixedBatch { batch } if batch == 0 => {
                return Err(contract("fixed batch size must be positive"))
            }
            ScheduleKind::Geometric { p } if !(p > 0.0 && p <= 1.0) => {
                return Err(contract(format!("geometric success probability {p} not in (0, 1]")))
            }
            ScheduleKind::TwoTimescale { gap } if gap.slope + gap.intercept == 0 => {
                return Err(contract("two-timescale gap must be at least 1"))
            }
            _ => {}
        }
        if stage == 0 || index == 0 {
            return Err(contract("update stages and indices start at 1"));
        }
        Ok(Self {
            kind,
            last_stage: stage,
            index,
        })
    }

    /// The schedule kind.
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// The most recent update stage `k_t`.
    pub fn last_stage(&self) -> u64 {
        self.last_stage
    }

    /// The index `t` of the most recent update stage.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Advances to and returns `k_{t+1}`.
    pub fn next_stage<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        let gap = match self.kind {
            ScheduleKind::EveryStage => 1,
            ScheduleKind::FixedBatch { batch } => batch,
            ScheduleKind::Geometric { p } => {
                if p >= 1.0 {
                    1
                } else {
                    1 + Geometric::new(p).expect("p validated").sample(rng)
                }
            }
            ScheduleKind::TwoTimescale { gap } => gap.gap(self.index),
        };
        self.last_stage += gap;
        self.index += 1;
        self.last_stage
    }
}

/// Advances `schedule` and returns the next update stage.
pub fn next_update_stage<R: Rng + ?Sized>(schedule: &mut UpdateSchedule, rng: &mut R) -> u64 {
    schedule.next_stage(rng)
}
