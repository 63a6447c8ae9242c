//! Bounded exhaustive exploration: outcome vectors and valency, both-lose
//! search, and the safety, abort, liveness and linearizability checkers.

pub mod checkers;
pub mod linearizability;
pub mod search;
pub mod valency;

use serde::{Deserialize, Serialize};

use crate::model::Schedule;

pub use checkers::{
    check_bounded_abort, check_deadlock_freedom, check_le_safety, check_le_safety_exhaustive, le_safety_violation,
    FairnessOptions,
};
pub use linearizability::{check_linearizable_cas, explore_cas, explore_name_decide, HistoryTooLarge};
pub use valency::{
    classify_bivalence, find_both_lose, outcome_vectors, solo_run, AbortMode, Bivalence, BothLoseError, OutcomeVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationBudget {
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl ExplorationBudget {
    pub fn new(max_depth: usize, max_nodes: usize) -> Self {
        assert!(max_depth > 0 && max_nodes > 0, "budgets must be positive");
        ExplorationBudget { max_depth, max_nodes }
    }

    pub fn depth(max_depth: usize) -> Self {
        Self::new(max_depth, 5_000_000)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail { witness: Schedule, reason: String },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    pub fn witness(&self) -> Option<&Schedule> {
        match self {
            Verdict::Fail { witness, .. } => Some(witness),
            _ => None,
        }
    }
}
