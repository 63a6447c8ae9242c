use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::analysis::rmr_of;
use crate::model::{Configuration, Model, ModelError, ProcessId, Ret, Schedule, ScheduleItem, StepAction};
use crate::objects::cas::{history, CasDemo, CasOp, CasRecord};

use super::search::{behaviour_key, bfs, moves_for, KeyOptions, Visit};
use super::{ExplorationBudget, Verdict};

pub const MAX_HISTORY: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("history has {0} operations; at most {MAX_HISTORY} are supported")]
pub struct HistoryTooLarge(pub usize);

/// Searches for a sequential order of the operations in `h` that respects
/// real-time precedence and CAS semantics from `initial`. Operations that
/// returned `⊥` are dropped first; pending ones may be placed anywhere after
/// their invocation or left out. Returns the order as indices into `h`.
pub fn check_linearizable_cas(h: &[CasRecord], initial: i64) -> Result<Option<Vec<usize>>, HistoryTooLarge> {
    let ops: Vec<(usize, &CasRecord)> = h.iter().enumerate().filter(|(_, r)| r.result != Some(Ret::Bottom)).collect();
    if ops.len() > MAX_HISTORY {
        return Err(HistoryTooLarge(ops.len()));
    }
    let m = ops.len();
    // before[i]: ops that must be linearized before op i.
    let before: Vec<u32> = ops
        .iter()
        .map(|(_, oi)| {
            ops.iter()
                .enumerate()
                .filter(|(_, (_, oj))| oj.resp.is_some_and(|r| r < oi.inv))
                .fold(0u32, |acc, (j, _)| acc | (1 << j))
        })
        .collect();
    let required: u32 = ops.iter().enumerate().filter(|(_, (_, o))| o.is_complete()).fold(0, |a, (j, _)| a | (1 << j));
    let mut failed: HashSet<(u32, i64)> = HashSet::new();
    let mut order = Vec::with_capacity(m);
    let ok = dfs(&ops, &before, required, 0, initial, &mut failed, &mut order);
    Ok(ok.then(|| order.iter().map(|&i| ops[i].0).collect()))
}

fn dfs(
    ops: &[(usize, &CasRecord)],
    before: &[u32],
    required: u32,
    done: u32,
    value: i64,
    failed: &mut HashSet<(u32, i64)>,
    order: &mut Vec<usize>,
) -> bool {
    if done & required == required {
        return true;
    }
    if failed.contains(&(done, value)) {
        return false;
    }
    for (i, (_, op)) in ops.iter().enumerate() {
        let bit = 1u32 << i;
        if done & bit != 0 || before[i] & !done != 0 {
            continue;
        }
        let (result, next) = match op.op {
            CasOp::Cas { cmp, new } => (value, if value == cmp { new } else { value }),
            CasOp::Read => (value, value),
        };
        if let Some(r) = op.result {
            if r != Ret::Value(result) {
                continue;
            }
        }
        order.push(i);
        if dfs(ops, before, required, done | bit, next, failed, order) {
            return true;
        }
        order.pop();
    }
    failed.insert((done, value));
    false
}

#[derive(Clone, Debug, Default)]
pub struct CasExploration {
    pub verdict: Option<Verdict>,
    /// Number of distinct finished histories checked.
    pub histories: usize,
    pub nodes: usize,
    pub complete: bool,
}

/// Explores every schedule of the CAS subject with at most one abort per
/// process. Each state in which every process has decided yields a complete
/// history, which must be linearizable after removing `⊥` results.
pub fn explore_cas(model: &Model, alg: &CasDemo, budget: ExplorationBudget) -> Result<CasExploration, ModelError> {
    let start = model.initial();
    let procs: Vec<ProcessId> = start.processes().collect();
    let mut out = CasExploration::default();
    let mut failure = None;
    let stats = bfs(
        model,
        &start,
        budget,
        |x| moves_for(x, &procs, true, true),
        |x| behaviour_key(x, KeyOptions { precedence: true, ..KeyOptions::default() }),
        |x, _| {
            if !procs.iter().all(|&p| x.proc(p).decision().is_some()) {
                return Visit::Expand;
            }
            out.histories += 1;
            let h = history(alg, x);
            match check_linearizable_cas(&h, 0) {
                Ok(Some(_)) => Visit::Leaf,
                Ok(None) => {
                    failure = Some(Verdict::Fail {
                        witness: x.lineage().clone(),
                        reason: "history has no linearization".into(),
                    });
                    Visit::Stop
                }
                Err(e) => {
                    failure = Some(Verdict::Inconclusive { reason: e.to_string() });
                    Visit::Stop
                }
            }
        },
    )?;
    out.nodes = stats.nodes;
    out.complete = stats.complete;
    out.verdict = Some(failure.unwrap_or(Verdict::Pass));
    Ok(out)
}

/// Maximum RMRs any single operation incurred, over an exhaustive search of
/// the schedules of `active` (others stay idle), with single aborts.
pub fn max_rmr_exhaustive(
    model: &Model,
    active: &[ProcessId],
    budget: ExplorationBudget,
) -> Result<(u64, bool, usize), ModelError> {
    let start = model.initial();
    let mut max = 0;
    let stats = bfs(
        model,
        &start,
        budget,
        |x| moves_for(x, active, true, true),
        |x| behaviour_key(x, KeyOptions { costs: true, ..KeyOptions::default() }),
        |x, _| {
            for &p in active {
                max = max.max(rmr_of(x.trace(), p));
            }
            Visit::Expand
        },
    )?;
    Ok((max, stats.complete, stats.nodes))
}

/// Maximum per-operation RMRs over random schedules of all processes with
/// random single aborts.
pub fn max_rmr_sampled(model: &Model, runs: usize, seed: u64, abort_prob: f64) -> Result<u64, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max = 0;
    let n = model.n();
    for _ in 0..runs {
        let mut c = model.initial();
        let mut guard = 0;
        while !c.all_returned() && guard < 100_000 {
            guard += 1;
            let p = ProcessId(rng.gen_range(0..n as u32));
            if c.proc(p).is_returned() {
                continue;
            }
            let item = if !c.proc(p).aborted && rng.gen_bool(abort_prob) {
                ScheduleItem::Abort(p)
            } else {
                ScheduleItem::Step(p)
            };
            model.step(&mut c, item)?;
        }
        for p in c.processes() {
            max = max.max(rmr_of(c.trace(), p));
        }
    }
    Ok(max)
}

#[derive(Clone, Debug, Default)]
pub struct NameDecideExploration {
    pub violations: Vec<(Schedule, String)>,
    pub finished: usize,
    pub nodes: usize,
    pub complete: bool,
}

/// Agreement, validity and no-effect-on-failure for name consensus, checked
/// at every state where all processes have decided.
pub fn name_decide_violation(c: &Configuration) -> Option<String> {
    let mut values: BTreeMap<i64, ProcessId> = BTreeMap::new();
    let invoked: Vec<ProcessId> = c.processes().filter(|&p| c.proc(p).first_step.is_some()).collect();
    for p in c.processes() {
        match c.proc(p).decision() {
            Some(Ret::Value(v)) => {
                values.insert(v, p);
                if !invoked.iter().any(|q| i64::from(q.0) == v) {
                    return Some(format!("{p} decided {v}, which is not a caller"));
                }
            }
            Some(Ret::Bottom) => {
                if !c.proc(p).aborted {
                    return Some(format!("{p} returned ⊥ without an abort"));
                }
                let wrote = c.trace().iter().any(|s| s.actor == p && matches!(s.action, StepAction::Write { .. }));
                if wrote {
                    return Some(format!("{p} returned ⊥ after changing shared memory"));
                }
            }
            _ => {}
        }
    }
    if values.len() > 1 {
        return Some(format!("disagreement on {:?}", values.keys().collect::<Vec<_>>()));
    }
    None
}

pub fn explore_name_decide(model: &Model, budget: ExplorationBudget) -> Result<NameDecideExploration, ModelError> {
    let start = model.initial();
    let procs: Vec<ProcessId> = start.processes().collect();
    let mut out = NameDecideExploration::default();
    let stats = bfs(
        model,
        &start,
        budget,
        |x| moves_for(x, &procs, true, true),
        |x| behaviour_key(x, KeyOptions::default()),
        |x, _| {
            if let Some(reason) = name_decide_violation(x) {
                out.violations.push((x.lineage().clone(), reason));
                return Visit::Leaf;
            }
            if procs.iter().all(|&p| x.proc(p).decision().is_some()) {
                out.finished += 1;
                Visit::Leaf
            } else {
                Visit::Expand
            }
        },
    )?;
    out.nodes = stats.nodes;
    out.complete = stats.complete;
    Ok(out)
}
