//! Samplers and dataset builders for Karel.
//!
//! Grids come from [`sample_uniform_grid`] (salient features spread as
//! widely as possible) or [`sample_narrow_grid`] (fixed wall and marker
//! ratios). Programs come from [`sample_program`] or, for action-only
//! datasets, [`enumerate_action_only`]. [`make_task`] pairs a program with
//! input grids under the no-crash and branch-coverage filter.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::karel::{Arm, BranchId};

mod grids;
mod programs;
mod tasks;

pub use grids::{
    sample_marker_count, sample_narrow_grid, sample_uniform_grid, GridSampler, GridSource, MarkerCountDist,
    NarrowGridParams,
};
pub use programs::{
    distinct_token_sequences, enumerate_action_only, has_nested, passes_action_pruning,
    random_action_program, sample_program, ConstructKind, ProductionTable,
};
pub use tasks::{
    augment_action_only, decile, make_task, random_pair_count, task_salients, AugmentConfig, IoPair,
    KarelVariable, SynthesisTask, TaskConfig, TaskSalients, TaskViolation, MAX_PAIRS,
};

/// How often one branch arm was taken by the shown inputs of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchDiagnostic {
    pub branch: BranchId,
    pub arm: Arm,
    /// Batches whose shown inputs took this arm at least once.
    pub batches_hit: u64,
}

impl fmt::Display for BranchDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {} batches", self.branch, self.arm, self.batches_hit)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "no valid examples for `{program}` after {attempts} batches \
         ({crashed_batches} crashed); arm coverage: {}",
        arm_summary(.branches)
    )]
    Uncoverable {
        program: String,
        attempts: u32,
        crashed_batches: u32,
        branches: Vec<BranchDiagnostic>,
    },
}

fn arm_summary(branches: &[BranchDiagnostic]) -> String {
    if branches.is_empty() {
        return "no branches".into();
    }
    branches
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}
