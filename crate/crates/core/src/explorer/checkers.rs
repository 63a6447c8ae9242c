use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Configuration, Model, ModelError, ProcessId, Ret, Schedule, ScheduleItem};

use super::search::{behaviour_key, bfs, moves_for, KeyOptions, Visit};
use super::{ExplorationBudget, Verdict};

/// The leader-election safety clauses on one configuration: at most one
/// winner, and if every participant returned `lose` then every participant
/// was aborted. Returns a description of the first violated clause.
pub fn le_safety_violation(c: &Configuration) -> Option<String> {
    let winners: Vec<ProcessId> = c.processes().filter(|&p| c.status(p).ret() == Some(Ret::Win)).collect();
    if winners.len() > 1 {
        let names: Vec<String> = winners.iter().map(ToString::to_string).collect();
        return Some(format!("several winners: {}", names.join(", ")));
    }
    let participants: Vec<ProcessId> = c.lineage().procs().into_iter().collect();
    if participants.is_empty() {
        return None;
    }
    let all_lost = participants.iter().all(|&p| c.status(p).ret() == Some(Ret::Lose));
    if all_lost {
        if let Some(p) = participants.iter().find(|&&p| !c.proc(p).aborted) {
            return Some(format!("every participant lost but {p} never received the abort signal"));
        }
    }
    None
}

pub fn check_le_safety(c: &Configuration) -> Verdict {
    match le_safety_violation(c) {
        Some(reason) => Verdict::Fail { witness: c.lineage().clone(), reason },
        None => Verdict::Pass,
    }
}

/// Checks the safety clauses at every configuration reachable within budget,
/// over schedules of all processes with arbitrary abort injection.
pub fn check_le_safety_exhaustive(model: &Model, budget: ExplorationBudget) -> Result<Verdict, ModelError> {
    let start = model.initial();
    let procs: Vec<ProcessId> = start.processes().collect();
    let mut failure = None;
    let stats = bfs(
        model,
        &start,
        budget,
        |x| moves_for(x, &procs, true, false),
        |x| behaviour_key(x, KeyOptions::default()),
        |x, _| match check_le_safety(x) {
            Verdict::Pass => Visit::Expand,
            v => {
                failure = Some(v);
                Visit::Stop
            }
        },
    )?;
    Ok(failure.unwrap_or_else(|| pass_or_inconclusive(stats.complete, stats.nodes)))
}

fn pass_or_inconclusive(complete: bool, nodes: usize) -> Verdict {
    if complete {
        Verdict::Pass
    } else {
        Verdict::Inconclusive { reason: format!("budget exhausted after {nodes} states") }
    }
}

/// Explores abort injections and fails if some aborted process has taken
/// `bound` steps since its abort without returning.
pub fn check_bounded_abort(model: &Model, bound: u64, budget: ExplorationBudget) -> Result<Verdict, ModelError> {
    let start = model.initial();
    let procs: Vec<ProcessId> = start.processes().collect();
    let mut failure = None;
    let stats = bfs(
        model,
        &start,
        budget,
        |x| moves_for(x, &procs, true, false),
        |x| behaviour_key(x, KeyOptions { abort_steps_cap: Some(bound), ..KeyOptions::default() }),
        |x, _| {
            let slow = x.processes().find(|&p| {
                let st = x.proc(p);
                st.aborted && !st.is_returned() && st.steps_since_abort >= bound
            });
            match slow {
                Some(p) => {
                    failure = Some(Verdict::Fail {
                        witness: x.lineage().clone(),
                        reason: format!("{p} took {bound} steps after its abort without returning"),
                    });
                    Visit::Stop
                }
                None => Visit::Expand,
            }
        },
    )?;
    Ok(failure.unwrap_or_else(|| pass_or_inconclusive(stats.complete, stats.nodes)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FairnessOptions {
    /// Own steps a process may take without returning before the run counts
    /// as stuck.
    pub max_steps_per_process: u64,
    /// Number of random fair schedules tried after the round-robin rotations.
    pub random_runs: usize,
    pub seed: u64,
}

impl FairnessOptions {
    pub fn for_system(n: usize) -> Self {
        FairnessOptions { max_steps_per_process: 8 * n as u64 * 64, random_runs: 64, seed: 0 }
    }
}

/// Runs fair schedules without aborts: every rotation of round-robin order,
/// then random orders in which each round is a fresh permutation of the
/// running processes. Fails if some process exceeds its step allowance.
pub fn check_deadlock_freedom(model: &Model, opts: FairnessOptions) -> Result<Verdict, ModelError> {
    let n = model.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let orders = (0..n).map(|s| (0..n).map(|i| ProcessId(((i + s) % n) as u32)).collect::<Vec<_>>());
    for order in orders {
        if let Some(v) = fair_run(model, opts, |_: &[ProcessId]| order.clone())? {
            return Ok(v);
        }
    }
    for _ in 0..opts.random_runs {
        let mut run_rng = ChaCha8Rng::from_rng(&mut rng).expect("seeding from a ChaCha stream cannot fail");
        let next_round = move |procs: &[ProcessId]| {
            let mut v = procs.to_vec();
            v.shuffle(&mut run_rng);
            v
        };
        if let Some(v) = fair_run(model, opts, next_round)? {
            return Ok(v);
        }
    }
    Ok(Verdict::Pass)
}

fn fair_run<F>(model: &Model, opts: FairnessOptions, mut order: F) -> Result<Option<Verdict>, ModelError>
where
    F: FnMut(&[ProcessId]) -> Vec<ProcessId>,
{
    let mut c = model.initial();
    let all: Vec<ProcessId> = c.processes().collect();
    loop {
        let running: Vec<ProcessId> = all.iter().copied().filter(|&p| !c.proc(p).is_returned()).collect();
        if running.is_empty() {
            return Ok(None);
        }
        for p in order(&all) {
            if c.proc(p).is_returned() {
                continue;
            }
            if c.proc(p).steps >= opts.max_steps_per_process {
                return Ok(Some(Verdict::Fail {
                    witness: c.lineage().clone(),
                    reason: format!("{p} took {} steps in a fair schedule without returning", c.proc(p).steps),
                }));
            }
            model.step(&mut c, ScheduleItem::Step(p))?;
        }
    }
}

/// Round-robin schedule over all processes, `rounds` times.
pub fn round_robin(n: usize, rounds: usize) -> Schedule {
    (0..rounds).flat_map(|_| (0..n as u32).map(|i| ScheduleItem::Step(ProcessId(i)))).collect()
}
