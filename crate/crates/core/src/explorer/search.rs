use std::collections::{HashSet, VecDeque};
use std::hash::Hash;

use crate::model::analysis::rmr_of;
use crate::model::{Configuration, Model, ModelError, Phase, ProcessId, Ret, ScheduleItem, Status};

use super::ExplorationBudget;

/// What to do with a node after visiting it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visit {
    Expand,
    Leaf,
    Stop,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: usize,
    /// Every reachable state within the depth bound was expanded.
    pub complete: bool,
    pub stopped: bool,
}

/// Breadth-first search over configurations reachable from `start`,
/// deduplicated by `key`. `visit` receives each new configuration and its
/// depth below `start`; the schedule that reached it is the suffix of its
/// lineage past `start`.
pub fn bfs<K, M, F, V>(
    model: &Model,
    start: &Configuration,
    budget: ExplorationBudget,
    moves: M,
    key: F,
    mut visit: V,
) -> Result<SearchStats, ModelError>
where
    K: Hash + Eq,
    M: Fn(&Configuration) -> Vec<ScheduleItem>,
    F: Fn(&Configuration) -> K,
    V: FnMut(&Configuration, usize) -> Visit,
{
    let mut seen: HashSet<K> = HashSet::new();
    let mut queue: VecDeque<(Configuration, usize)> = VecDeque::new();
    let mut stats = SearchStats { nodes: 0, complete: true, stopped: false };
    seen.insert(key(start));
    queue.push_back((start.clone(), 0));
    while let Some((c, depth)) = queue.pop_front() {
        stats.nodes += 1;
        match visit(&c, depth) {
            Visit::Stop => {
                stats.stopped = true;
                stats.complete = false;
                return Ok(stats);
            }
            Visit::Leaf => continue,
            Visit::Expand => {}
        }
        let items = moves(&c);
        if items.is_empty() {
            continue;
        }
        if depth >= budget.max_depth {
            stats.complete = false;
            continue;
        }
        for item in items {
            let mut next = c.clone();
            if model.step(&mut next, item)?.is_none() {
                continue;
            }
            if seen.insert(key(&next)) {
                if seen.len() > budget.max_nodes {
                    stats.complete = false;
                    return Ok(stats);
                }
                queue.push_back((next, depth + 1));
            }
        }
    }
    Ok(stats)
}

/// Options for [`behaviour_key`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KeyOptions {
    /// Include per-process RMR totals and cache validity.
    pub costs: bool,
    /// Include the real-time order between finished and started operations.
    pub precedence: bool,
    /// Include post-abort step counts, saturated at this value.
    pub abort_steps_cap: Option<u64>,
}

fn ret_code(r: Ret) -> [i64; 2] {
    match r {
        Ret::Win => [0, 0],
        Ret::Lose => [1, 0],
        Ret::Bottom => [2, 0],
        Ret::Value(v) => [3, v],
    }
}

fn phase_code(phase: Phase) -> [i64; 4] {
    match phase {
        Phase::Scan(i) => [0, i64::from(i), 0, 0],
        Phase::Invoke => [1, 0, 0, 0],
        Phase::Run => [2, 0, 0, 0],
        Phase::Terminate { ret, next } => {
            let [t, v] = ret_code(ret);
            [3 + t, v, i64::from(next), 0]
        }
        Phase::Halted => [-1, 0, 0, 0],
    }
}

/// Everything that can influence the future behaviour of the processes,
/// flattened. State tokens and step counters are left out: algorithms never
/// branch on them, so configurations differing only there behave alike.
pub fn behaviour_key(c: &Configuration, opts: KeyOptions) -> Vec<i64> {
    let mut k = Vec::with_capacity(16 * c.n());
    for st in c.procs() {
        k.push(i64::from(st.locals.pc));
        k.extend_from_slice(&st.locals.vars);
        k.extend_from_slice(&phase_code(st.phase));
        k.push(i64::from(st.aborted));
        match st.status {
            Status::Running => k.extend_from_slice(&[-1, 0]),
            Status::Returned(r) => k.extend_from_slice(&ret_code(r)),
        }
        if let Some(cap) = opts.abort_steps_cap {
            k.push(st.steps_since_abort.min(cap) as i64);
        }
        k.push(i64::MIN);
    }
    for (r, v) in c.written_registers() {
        k.extend_from_slice(&[i64::from(r.owner.0), i64::from(r.index), i64::from(v.writer.0), v.data]);
    }
    if opts.costs {
        k.push(i64::MIN);
        for p in c.processes() {
            k.push(rmr_of(c.trace(), p) as i64);
            let st = c.proc(p);
            for (r, v) in &st.last_seen {
                if c.value(*r) == *v {
                    k.extend_from_slice(&[i64::from(r.owner.0), i64::from(r.index)]);
                }
            }
            k.push(i64::MIN);
        }
    }
    if opts.precedence {
        k.push(i64::MIN);
        for p in c.processes() {
            let st = c.proc(p);
            k.push(st.first_step.is_some() as i64);
            let mut mask = 0i64;
            if let Some(inv) = st.first_step {
                for q in c.processes() {
                    if c.proc(q).decided_at.is_some_and(|d| d < inv) {
                        mask |= 1 << q.0;
                    }
                }
            }
            k.push(mask);
        }
    }
    k
}

/// Schedule items that change something for the given processes: steps of
/// processes still running and, if `aborts`, first aborts of undecided ones.
/// With `stop_at_decision`, a process that has chosen its result is no longer
/// scheduled.
pub fn moves_for(c: &Configuration, procs: &[ProcessId], aborts: bool, stop_at_decision: bool) -> Vec<ScheduleItem> {
    let mut out = Vec::with_capacity(procs.len() * 2);
    for &p in procs {
        let st = c.proc(p);
        if st.is_returned() {
            continue;
        }
        let decided = st.decision().is_some();
        if stop_at_decision && decided {
            continue;
        }
        out.push(ScheduleItem::Step(p));
        if aborts && !st.aborted && !decided {
            out.push(ScheduleItem::Abort(p));
        }
    }
    out
}
