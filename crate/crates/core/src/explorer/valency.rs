use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::analysis::lost_set;
use crate::model::{Configuration, Model, ModelError, ProcessId, Ret, Schedule, ScheduleItem};

use super::search::{behaviour_key, bfs, moves_for, KeyOptions, Visit};
use super::ExplorationBudget;

/// Whether abort symbols may appear in the explored schedules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortMode {
    AbortFree,
    WithAborts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeVector {
    pub a: Ret,
    pub b: Ret,
}

impl OutcomeVector {
    pub const WIN_LOSE: OutcomeVector = OutcomeVector { a: Ret::Win, b: Ret::Lose };
    pub const LOSE_WIN: OutcomeVector = OutcomeVector { a: Ret::Lose, b: Ret::Win };
    pub const LOSE_LOSE: OutcomeVector = OutcomeVector { a: Ret::Lose, b: Ret::Lose };
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutcomeSet {
    /// Each reachable vector with the first schedule found that produces it.
    pub vectors: BTreeMap<OutcomeVector, Schedule>,
    pub complete: bool,
    pub nodes: usize,
}

impl OutcomeSet {
    pub fn contains(&self, v: OutcomeVector) -> bool {
        self.vectors.contains_key(&v)
    }

    pub fn is_exactly(&self, vs: &[OutcomeVector]) -> bool {
        self.vectors.len() == vs.len() && vs.iter().all(|v| self.contains(*v))
    }
}

fn suffix(c: &Configuration, start: &Configuration) -> Schedule {
    Schedule(c.lineage().items()[start.lineage().len()..].to_vec())
}

/// `𝒱(C)` for the pair `a, b`, explored breadth-first within `budget`.
pub fn outcome_vectors(
    model: &Model,
    c: &Configuration,
    a: ProcessId,
    b: ProcessId,
    mode: AbortMode,
    budget: ExplorationBudget,
) -> Result<OutcomeSet, ModelError> {
    assert_ne!(a, b);
    let procs = [a, b];
    let aborts = mode == AbortMode::WithAborts;
    let mut out = OutcomeSet::default();
    let stats = bfs(
        model,
        c,
        budget,
        |x| moves_for(x, &procs, aborts, false),
        |x| behaviour_key(x, KeyOptions::default()),
        |x, _| match (x.status(a).ret(), x.status(b).ret()) {
            (Some(ra), Some(rb)) => {
                out.vectors.entry(OutcomeVector { a: ra, b: rb }).or_insert_with(|| suffix(x, c));
                Visit::Leaf
            }
            _ => Visit::Expand,
        },
    )?;
    out.complete = stats.complete;
    out.nodes = stats.nodes;
    Ok(out)
}

/// Result of running one process alone.
#[derive(Clone, Debug)]
pub struct SoloRun {
    pub config: Configuration,
    pub schedule: Schedule,
    /// `None` if the process did not return within the step limit.
    pub ret: Option<Ret>,
}

/// Runs `p` alone from `c` until it returns or takes `limit` steps.
pub fn solo_run(model: &Model, c: &Configuration, p: ProcessId, limit: usize) -> Result<SoloRun, ModelError> {
    let mut x = c.clone();
    let mut schedule = Schedule::new();
    for _ in 0..limit {
        if x.proc(p).is_returned() {
            break;
        }
        model.step(&mut x, ScheduleItem::Step(p))?;
        schedule.step(p);
    }
    let ret = x.status(p).ret();
    Ok(SoloRun { config: x, schedule, ret })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bivalence {
    NotBivalent,
    Bivalent,
    StronglyBivalent,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub class: Bivalence,
    pub outcomes: OutcomeSet,
    pub solo_a: Option<Ret>,
    pub solo_b: Option<Ret>,
}

/// Default step limit for solo runs made by the explorer.
pub const SOLO_LIMIT: usize = 10_000;

pub fn classify_bivalence(
    model: &Model,
    c: &Configuration,
    a: ProcessId,
    b: ProcessId,
    mode: AbortMode,
    budget: ExplorationBudget,
) -> Result<Classification, ModelError> {
    let outcomes = outcome_vectors(model, c, a, b, mode, budget)?;
    let solo_a = solo_run(model, c, a, SOLO_LIMIT)?.ret;
    let solo_b = solo_run(model, c, b, SOLO_LIMIT)?.ret;
    let class = if !outcomes.is_exactly(&[OutcomeVector::WIN_LOSE, OutcomeVector::LOSE_WIN]) {
        Bivalence::NotBivalent
    } else if solo_a == Some(Ret::Win) && solo_b == Some(Ret::Win) {
        Bivalence::StronglyBivalent
    } else {
        Bivalence::Bivalent
    };
    Ok(Classification { class, outcomes, solo_a, solo_b })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BothLoseError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct BothLose {
    /// `None` if the budget ran out first.
    pub schedule: Option<Schedule>,
    pub nodes: usize,
}

/// Searches for `σ ∈ ({a,b}^Δ)*` after which both `a` and `b` have lost.
/// Schedules starting with both aborts are tried first.
pub fn find_both_lose(
    model: &Model,
    c: &Configuration,
    a: ProcessId,
    b: ProcessId,
    budget: ExplorationBudget,
) -> Result<BothLose, BothLoseError> {
    let lost = lost_set(c);
    for p in [a, b] {
        if lost.contains(&p) {
            return Err(BothLoseError::PreconditionViolated(format!("{p} has already lost")));
        }
        if c.proc(p).aborted {
            return Err(BothLoseError::PreconditionViolated(format!("{p} already received the abort signal")));
        }
        let solo = solo_run(model, c, p, SOLO_LIMIT)?;
        if solo.ret != Some(Ret::Win) {
            return Err(BothLoseError::PreconditionViolated(format!("{p} does not win its solo run")));
        }
    }
    let both_lost = |x: &Configuration| x.status(a).ret() == Some(Ret::Lose) && x.status(b).ret() == Some(Ret::Lose);
    let mut nodes = 0;
    for aborts_first in [true, false] {
        let mut start = c.clone();
        if aborts_first {
            model.step(&mut start, ScheduleItem::Abort(a))?;
            model.step(&mut start, ScheduleItem::Abort(b))?;
        }
        let mut found = None;
        let stats = bfs(
            model,
            &start,
            budget,
            |x| moves_for(x, &[a, b], !aborts_first, false),
            |x| behaviour_key(x, KeyOptions::default()),
            |x, _| {
                if both_lost(x) {
                    found = Some(suffix(x, c));
                    Visit::Stop
                } else {
                    Visit::Expand
                }
            },
        )?;
        nodes += stats.nodes;
        if found.is_some() {
            return Ok(BothLose { schedule: found, nodes });
        }
    }
    Ok(BothLose { schedule: None, nodes })
}

/// Whether some `{a,b}`-only schedule from `c` runs forever without either
/// process returning. Detected as a cycle in the deduplicated state graph.
pub fn has_nonterminating_run(
    model: &Model,
    c: &Configuration,
    a: ProcessId,
    b: ProcessId,
    mode: AbortMode,
    max_nodes: usize,
) -> Result<Option<bool>, ModelError> {
    let procs = [a, b];
    let aborts = mode == AbortMode::WithAborts;
    let live = |x: &Configuration| !x.proc(a).is_returned() && !x.proc(b).is_returned();
    // 0 = on the DFS stack, 1 = finished.
    let mut color: HashMap<Vec<i64>, u8> = HashMap::new();
    let mut stack: Vec<(Configuration, Vec<ScheduleItem>)> = Vec::new();
    if !live(c) {
        return Ok(Some(false));
    }
    color.insert(behaviour_key(c, KeyOptions::default()), 0);
    stack.push((c.clone(), moves_for(c, &procs, aborts, false)));
    while let Some(top) = stack.last_mut() {
        let Some(item) = top.1.pop() else {
            let (x, _) = stack.pop().expect("stack is non-empty");
            color.insert(behaviour_key(&x, KeyOptions::default()), 1);
            continue;
        };
        let mut y = top.0.clone();
        if model.step(&mut y, item)?.is_none() || !live(&y) {
            continue;
        }
        let k = behaviour_key(&y, KeyOptions::default());
        match color.get(&k) {
            Some(0) => return Ok(Some(true)),
            Some(_) => continue,
            None => {
                if color.len() >= max_nodes {
                    return Ok(None);
                }
                color.insert(k, 0);
                let m = moves_for(&y, &procs, aborts, false);
                stack.push((y, m));
            }
        }
    }
    Ok(Some(false))
}

/// Searches for a schedule after which `p` has taken more than `bound`
/// shared-memory steps without returning.
pub fn find_long_run(
    model: &Model,
    c: &Configuration,
    p: ProcessId,
    bound: u64,
    budget: ExplorationBudget,
) -> Result<Option<Schedule>, ModelError> {
    let procs: Vec<ProcessId> = c.processes().collect();
    let base = c.proc(p).steps;
    let mut found = None;
    bfs(
        model,
        c,
        budget,
        |x| moves_for(x, &procs, false, false),
        |x| {
            let mut k = behaviour_key(x, KeyOptions::default());
            k.push((x.proc(p).steps - base).min(bound + 1) as i64);
            k
        },
        |x, _| {
            let st = x.proc(p);
            if !st.is_returned() && st.steps - base > bound {
                found = Some(suffix(x, c));
                Visit::Stop
            } else {
                Visit::Expand
            }
        },
    )?;
    Ok(found)
}
