//! Fuzzed model claims shared by the property tests and the acceptance run.
//! Each check returns `Ok(true)` when the case exercised the claim,
//! `Ok(false)` when the case was vacuous, and `Err` with a replayable
//! description when the claim failed.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use proptest::prelude::*;

use rmrlab_core::adversary::{extend_to_poised, project, select_v, PoisedMap};
use rmrlab_core::model::analysis::{
    cache_set, is_safe, knows_set, lost_set, overwrite_pairs, rmr_counts, total_rmr, winners,
};
use rmrlab_core::model::config::restrict;
use rmrlab_core::model::*;
use rmrlab_core::objects::PetersonTree;

pub type Outcome = Result<bool, String>;
pub type Claim = fn(&Case) -> Outcome;

#[derive(Clone, Copy, Debug)]
pub enum Subject {
    Le2,
    Tournament(usize),
    Doorway(usize),
}

impl Subject {
    pub fn n(self) -> usize {
        match self {
            Subject::Le2 => 2,
            Subject::Tournament(n) | Subject::Doorway(n) => n,
        }
    }

    fn algorithm(self) -> Arc<dyn Algorithm> {
        match self {
            Subject::Le2 => Arc::new(PetersonTree::le2()),
            Subject::Tournament(n) => Arc::new(PetersonTree::tournament(n)),
            Subject::Doorway(n) => Arc::new(PetersonTree::tournament_doorway(n)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Case {
    pub subject: Subject,
    pub scan_prefix: bool,
    pub schedule: Schedule,
    pub mask: u32,
    /// Abort-free continuation: entry `v` is a run of `1 + v / 4` steps by
    /// process `v % n`.
    pub tail: Vec<u32>,
}

impl Case {
    pub fn continuation(&self) -> Schedule {
        let n = self.subject.n() as u32;
        self.tail.iter().flat_map(|&v| std::iter::repeat_n(ScheduleItem::Step(ProcessId(v % n)), 1 + v as usize / 4)).collect()
    }

    pub fn model(&self) -> Model {
        let opts = ModelOptions { scan_prefix: self.scan_prefix, ..ModelOptions::default() };
        Model::with_options(self.subject.algorithm(), opts)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (n = {}, scan_prefix = {}), schedule {}", self.subject, self.subject.n(), self.scan_prefix, self.schedule)?;
        if !self.tail.is_empty() {
            write!(f, ", continuation {}", self.continuation())?;
        }
        Ok(())
    }
}

fn arb_subject() -> impl Strategy<Value = Subject> {
    prop_oneof![Just(Subject::Le2), Just(Subject::Tournament(3)), Just(Subject::Tournament(4)), Just(Subject::Doorway(4))]
}

/// Random schedules with roughly one abort in eight items.
pub fn arb_case() -> impl Strategy<Value = Case> {
    let items = proptest::collection::vec((0u32..4, 0u8..8), 0..60);
    let tail = proptest::collection::vec(0u32..32, 0..16);
    (arb_subject(), any::<bool>(), items, any::<u32>(), tail).prop_map(
        |(subject, scan_prefix, items, mask, tail)| {
            let n = subject.n() as u32;
            let schedule = items
                .into_iter()
                .map(|(p, k)| if k == 0 { ScheduleItem::Abort(ProcessId(p % n)) } else { ScheduleItem::Step(ProcessId(p % n)) })
                .collect();
            Case { subject, scan_prefix, schedule, mask, tail }
        },
    )
}

/// The longest prefix of the case's schedule whose configuration is safe.
fn safe_prefix(model: &Model, sigma: &Schedule) -> (Configuration, Schedule) {
    let mut c = model.initial();
    let mut best = (c.clone(), Schedule::new());
    for (i, &item) in sigma.items().iter().enumerate() {
        model.step(&mut c, item).expect("reference subjects do not fault");
        if is_safe(&c) {
            best = (c.clone(), Schedule(sigma.items()[..=i].to_vec()));
        }
    }
    best
}

/// A safe configuration, and a set `P` with `L(C) ⊆ P ⊊ Proc(σ)`.
fn projection_input(case: &Case) -> Option<(Model, Configuration, Schedule, BTreeSet<ProcessId>)> {
    let model = case.model();
    let (c, sigma) = safe_prefix(&model, &case.schedule);
    let procs = sigma.procs();
    let masked = procs.iter().copied().filter(|p| case.mask & (1 << p.0) != 0);
    let keep: BTreeSet<ProcessId> = masked.chain(lost_set(&c)).collect();
    (keep != procs).then_some((model, c, sigma, keep))
}

/// A safe configuration with exactly one winner and another participant:
/// the safe prefix of the case, then a solo run of one process to its end.
fn winner_input(case: &Case) -> Option<(Model, Configuration, Schedule, ProcessId)> {
    let model = case.model();
    let (mut c, mut sigma) = safe_prefix(&model, &case.schedule);
    if winners(&c).is_empty() {
        let w = ProcessId(case.mask % case.subject.n() as u32);
        for _ in 0..10_000 {
            if c.proc(w).is_returned() {
                break;
            }
            model.step(&mut c, ScheduleItem::Step(w)).unwrap();
            sigma.step(w);
        }
    }
    let w = winners(&c);
    if w.len() != 1 || sigma.procs().len() < 2 || !is_safe(&c) {
        return None;
    }
    Some((model, c, sigma, *w.iter().next().unwrap()))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn projection_same_execution(case: &Case) -> Outcome {
    let Some((model, c, sigma, keep)) = projection_input(case) else { return Ok(false) };
    let d = model.run(&sigma.project(&keep)).unwrap();
    let right: Vec<Event> = d.trace().iter().map(ExecutionStep::event).collect();
    ensure(restrict(c.trace(), &keep) == right, || format!("{case}: keeping {keep:?} after prefix {sigma} changes the execution"))?;
    Ok(true)
}

pub fn projection_cache(case: &Case) -> Outcome {
    let Some((model, c, sigma, keep)) = projection_input(case) else { return Ok(false) };
    let d = model.run(&sigma.project(&keep)).unwrap();
    for &p in &keep {
        ensure(cache_set(&c, p) == cache_set(&d, p), || format!("{case}: keeping {keep:?} after prefix {sigma} changes the cache of {p}"))?;
    }
    Ok(true)
}

pub fn projection_safe(case: &Case) -> Outcome {
    let Some((model, _, sigma, keep)) = projection_input(case) else { return Ok(false) };
    let d = model.run(&sigma.project(&keep)).unwrap();
    ensure(is_safe(&d), || format!("{case}: keeping {keep:?} after prefix {sigma} is unsafe"))?;
    Ok(true)
}

/// Equal executions on `P` give equal RMR counts and equal `K ∩ P×P`.
pub fn projection_rmr_and_knowledge(case: &Case) -> Outcome {
    let Some((model, c, sigma, keep)) = projection_input(case) else { return Ok(false) };
    let d = model.run(&sigma.project(&keep)).unwrap();
    ensure(rmr_counts(c.trace(), &keep) == rmr_counts(d.trace(), &keep), || format!("{case}: RMR counts differ after prefix {sigma}"))?;
    let inside = |k: BTreeSet<(ProcessId, ProcessId)>| -> BTreeSet<_> {
        k.into_iter().filter(|(a, b)| keep.contains(a) && keep.contains(b)).collect()
    };
    ensure(inside(knows_set(&c)) == inside(knows_set(&d)), || format!("{case}: K on {keep:?} differs after prefix {sigma}"))?;
    Ok(true)
}

pub fn winner_projection(case: &Case) -> Outcome {
    let Some((model, c, sigma, winner)) = winner_input(case) else { return Ok(false) };
    let keep: BTreeSet<ProcessId> = sigma.procs().into_iter().filter(|&p| p != winner).collect();
    let d = model.run(&sigma.project(&keep)).unwrap();
    for &p in &keep {
        ensure(c.history(p) == d.history(p), || format!("{case}: erasing {winner} from {sigma} changes the history of {p}"))?;
        ensure(cache_set(&c, p) == cache_set(&d, p), || format!("{case}: erasing {winner} from {sigma} changes the cache of {p}"))?;
    }
    Ok(true)
}

pub fn zero_rmr_safe(case: &Case) -> Outcome {
    let model = case.model();
    let (c, sigma) = safe_prefix(&model, &case.schedule);
    let mut tried = false;
    for p in c.processes() {
        let st = c.proc(p);
        if st.aborted || st.is_returned() || !st.has_stepped() {
            continue;
        }
        let mut d = c.clone();
        let Some(step) = model.step(&mut d, ScheduleItem::Step(p)).unwrap() else { continue };
        if step.is_rmr {
            continue;
        }
        tried = true;
        ensure(is_safe(&d), || format!("{case}: local step of {p} after {sigma} breaks safety"))?;
    }
    Ok(tried)
}

pub fn k_change_names_actor(case: &Case) -> Outcome {
    let model = case.model();
    let mut c = model.initial();
    let mut k = knows_set(&c);
    let mut changed = false;
    for (i, &item) in case.schedule.items().iter().enumerate() {
        let Some(step) = model.step(&mut c, item).unwrap() else { continue };
        let next = knows_set(&c);
        for &(a, b) in k.symmetric_difference(&next) {
            changed = true;
            ensure(a == step.actor || b == step.actor, || format!("{case}: item {i} ({item}) changes ({a}, {b}) in K"))?;
        }
        k = next;
    }
    Ok(changed)
}

/// One poised step each by a set of processes, no two writing the same
/// register, from a safe configuration.
pub fn bounds_on_k_and_m(case: &Case) -> Outcome {
    let model = case.model();
    let (c, sigma) = safe_prefix(&model, &case.schedule);
    let Ok(ext) = extend_to_poised(&model, &c, &sigma.procs()) else { return Ok(false) };
    let d = ext.config;
    let lost = lost_set(&d);
    let pop: BTreeSet<ProcessId> = d.lineage().procs().difference(&lost).copied().collect();
    let Ok(map) = PoisedMap::build(&model, &d, &pop) else { return Ok(false) };
    let v = select_v(&map);
    if v.len() < 2 {
        return Ok(false);
    }
    let keep: BTreeSet<ProcessId> = v.union(&lost).copied().collect();
    let c1 = project(&model, &d, &keep).unwrap();
    ensure(is_safe(&c1), || format!("{case}: restriction of the poised extension is unsafe"))?;
    let one_shot: Schedule = v.iter().map(|&p| ScheduleItem::Step(p)).collect();
    let (after, exec) = model.apply(&c1, &one_shot).unwrap();
    let exec_rmr = total_rmr(&exec.steps);
    let known = knows_set(&after).into_iter().filter(|(a, b)| v.contains(a) && v.contains(b)).count() as u64;
    let m = overwrite_pairs(&c1, &exec.steps, &v).len() as u64;
    let at = || format!("{case}: from {} one step each of {v:?}", c1.lineage());
    ensure(known <= 2 * exec_rmr, || format!("{}: |K| = {known} > 2 * {exec_rmr}", at()))?;
    ensure(m <= total_rmr(c1.trace()) + exec_rmr, || format!("{}: |M| = {m} too large", at()))?;
    Ok(true)
}

pub fn replay_is_deterministic(case: &Case) -> Outcome {
    let model = case.model();
    let c = model.run(&case.schedule).unwrap();
    let again = model.run(c.lineage()).unwrap();
    ensure(c == again, || format!("{case}: replaying the lineage gives a different configuration"))?;
    Ok(true)
}

pub fn written_values_are_unique(case: &Case) -> Outcome {
    let model = case.model();
    let c = model.run(&case.schedule.concat(&case.continuation())).unwrap();
    let mut seen = BTreeSet::new();
    for s in c.trace() {
        if let StepAction::Write { value, .. } = s.action {
            ensure(value.token.is_some() && seen.insert(value), || format!("{case}: step {} repeats {value:?}", s.seq))?;
        }
    }
    Ok(!seen.is_empty())
}

/// From a safe configuration whose aborted processes have all lost, at most
/// one process terminates while `K` stays the same.
pub fn one_terminates(case: &Case) -> Outcome {
    let model = case.model();
    let (c, sigma) = safe_prefix(&model, &case.schedule);
    let lost = lost_set(&c);
    if !sigma.aborted().is_subset(&lost) {
        return Ok(false);
    }
    let k = knows_set(&c);
    let mut x = c.clone();
    let mut exercised = false;
    for (i, &item) in case.continuation().items().iter().enumerate() {
        model.step(&mut x, item).unwrap();
        if knows_set(&x) != k {
            continue;
        }
        let done: Vec<ProcessId> = x.processes().filter(|&q| x.proc(q).is_returned() && !c.proc(q).is_returned()).collect();
        exercised |= !done.is_empty();
        ensure(done.len() <= 1, || format!("{case}: after {} continuation steps {done:?} all terminated", i + 1))?;
    }
    Ok(exercised)
}

/// A participant of a safe configuration that has not lost, was never
/// aborted and learns nothing new in its solo run wins it.
pub fn solo_win(case: &Case) -> Outcome {
    let model = case.model();
    let (c, sigma) = safe_prefix(&model, &case.schedule);
    let lost = lost_set(&c);
    let k = knows_set(&c);
    let mut exercised = false;
    for p in sigma.procs() {
        if lost.contains(&p) || sigma.contains_abort_of(p) || c.proc(p).is_returned() {
            continue;
        }
        let mut x = c.clone();
        let mut learned = false;
        for _ in 0..10_000 {
            if x.proc(p).is_returned() {
                break;
            }
            model.step(&mut x, ScheduleItem::Step(p)).unwrap();
            if knows_set(&x).iter().any(|pair| pair.0 == p && !k.contains(pair)) {
                learned = true;
                break;
            }
        }
        if learned {
            continue;
        }
        exercised = true;
        ensure(x.status(p).ret() == Some(Ret::Win), || format!("{case}: {p} runs solo without learning anything and ends {:?}", x.status(p)))?;
    }
    Ok(exercised)
}

/// Every claim with the name it is reported under.
pub const CLAIMS: &[(&str, Claim)] = &[
    ("projection_same_execution", projection_same_execution),
    ("projection_cache", projection_cache),
    ("projectionSafe", projection_safe),
    ("winnerProjection", winner_projection),
    ("zeroRMRsafe", zero_rmr_safe),
    ("KChangeSharedMemoryStep", k_change_names_actor),
    ("boundsOnKandM", bounds_on_k_and_m),
    ("projection keeps RMR and K", projection_rmr_and_knowledge),
];
