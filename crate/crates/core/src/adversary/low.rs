use std::collections::BTreeSet;

use crate::model::analysis::{is_safe, knows_set, lost_set, overwrite_pairs, rmr_counts, total_rmr};
use crate::model::{Configuration, Model, ProcessId, Schedule, ScheduleItem};

use super::graph::{ConflictGraph, EdgeRule, TuranMode};
use super::poised::{active, project_checked, PoisedMap};
use super::{AdversaryError, Checks};

#[derive(Clone, Debug)]
pub struct LowOutcome {
    pub config: Configuration,
    /// Processes that took their poised step and stay in the execution.
    pub q: BTreeSet<ProcessId>,
    pub v: BTreeSet<ProcessId>,
    pub graph: ConflictGraph,
    pub independent: BTreeSet<ProcessId>,
    /// Members of the independent set that finished during the one-shot step.
    pub terminated: BTreeSet<ProcessId>,
    pub checks: Checks,
}

/// A maximal `V`: every poised reader, then for each register nobody reads
/// the lowest-id poised writer.
pub fn select_v(map: &PoisedMap) -> BTreeSet<ProcessId> {
    let mut v = map.all_readers();
    for (r, ws) in &map.writers {
        if !map.readers.contains_key(r) {
            v.extend(ws.iter().next());
        }
    }
    v
}

fn one_shot(model: &Model, c: &Configuration, procs: &BTreeSet<ProcessId>) -> Result<Configuration, AdversaryError> {
    let sigma: Schedule = procs.iter().map(|&p| ScheduleItem::Step(p)).collect();
    Ok(model.apply(c, &sigma)?.0)
}

pub fn low_contention_round(
    model: &Model,
    d: &Configuration,
    map: &PoisedMap,
    ell: u32,
    mode: TuranMode,
) -> Result<LowOutcome, AdversaryError> {
    let p = active(d);
    let lost = lost_set(d);
    let v = select_v(map);
    let mut checks = Checks::default();

    let keep: BTreeSet<ProcessId> = v.union(&lost).copied().collect();
    let c1 = project_checked(model, d, &keep, "restriction to V")?;
    let after = one_shot(model, &c1, &v)?;
    let exec = &after.trace()[c1.trace().len()..];
    let exec_rmr = total_rmr(exec);
    let base_rmr = total_rmr(c1.trace());
    let same_steps = exec.len() == v.len()
        && exec.iter().all(|s| {
            let want = map.steps[&s.actor];
            s.is_rmr && s.action.register() == want.action.register() && s.action.is_write() == want.action.is_write()
        });
    checks.push("poised steps unchanged after restriction", same_steps);

    let mut graph = ConflictGraph::new(v.clone());
    let known: Vec<_> = knows_set(&after).into_iter().filter(|(a, b)| v.contains(a) && v.contains(b)).collect();
    for &(a, b) in &known {
        graph.add(a, b, EdgeRule::Know);
    }
    let m = overwrite_pairs(&c1, exec, &v);
    for &(a, b) in &m {
        graph.add(a, b, EdgeRule::Overwrite);
    }
    let pairs: BTreeSet<(ProcessId, ProcessId)> = graph.edges.iter().map(|&(a, b, _)| (a, b)).collect();
    checks.push("knowledge pairs within 2 RMR", known.len() as u64 <= 2 * exec_rmr);
    checks.push("overwrite pairs within RMR bound", m.len() as u64 <= base_rmr + exec_rmr);
    checks.push("edge count within 3 RMR + history RMR", pairs.len() as u64 <= 3 * exec_rmr + base_rmr);

    let independent = graph.independent_set(mode);
    checks.push("independent set meets Turán bound", independent.len() as f64 + 1e-9 >= graph.turan_bound());

    let probe = one_shot(model, &c1, &independent)?;
    let terminated: BTreeSet<ProcessId> =
        independent.iter().copied().filter(|&x| probe.status(x).is_returned()).collect();
    if terminated.len() > 1 {
        return Err(AdversaryError::Subject(format!("{} processes finish in one independent step", terminated.len())));
    }
    let q: BTreeSet<ProcessId> = independent.difference(&terminated).copied().collect();

    let o: BTreeSet<ProcessId> = q.union(&lost).copied().collect();
    let c2 = project_checked(model, &c1, &o, "restriction to the independent set")?;
    let config = one_shot(model, &c2, &q)?;

    let bound = p.len() as f64 / (60.0 * f64::from(ell).powi(2)) - 1.0;
    checks.push("survivor bound", q.len() as f64 >= bound);
    checks.push("result is safe", is_safe(&config));
    let before = rmr_counts(d.trace(), &q);
    let now = rmr_counts(config.trace(), &q);
    checks.push("one RMR per survivor", q.iter().all(|x| now[x] == before[x] + 1));
    checks.push("survivors never aborted", q.iter().all(|&x| !config.lineage().contains_abort_of(x)));

    Ok(LowOutcome { config, q, v, graph, independent, terminated, checks })
}
