use std::collections::{BTreeMap, BTreeSet};

use super::config::{Configuration, ExecutionStep, StepAction};
use super::ids::{ProcessId, RegisterId, Ret};

pub type Pair = (ProcessId, ProcessId);

/// Whether a read or write of `r` by `p` from `c` would be remote.
pub fn rmr_flag(c: &Configuration, p: ProcessId, r: RegisterId, write: bool) -> bool {
    if r.owner == p {
        return false;
    }
    if write {
        return true;
    }
    !has_valid_copy(c, p, r)
}

fn has_valid_copy(c: &Configuration, p: ProcessId, r: RegisterId) -> bool {
    c.proc(p).last_seen.get(&r) == Some(&c.value(r))
}

/// `Cache_p(C)`.
pub fn cache_set(c: &Configuration, p: ProcessId) -> BTreeSet<RegisterId> {
    let st = c.proc(p);
    if st.is_returned() {
        return BTreeSet::new();
    }
    let mut out: BTreeSet<RegisterId> = c.segment(p).collect();
    for (&r, v) in &st.last_seen {
        if c.value(r) == *v {
            out.insert(r);
        }
    }
    out
}

/// `L(C)`.
pub fn lost_set(c: &Configuration) -> BTreeSet<ProcessId> {
    c.processes().filter(|&p| c.status(p).ret() == Some(Ret::Lose)).collect()
}

pub fn winners(c: &Configuration) -> BTreeSet<ProcessId> {
    c.processes().filter(|&p| c.status(p).ret() == Some(Ret::Win)).collect()
}

/// Processes with at least one shared-memory step in `E(C)`.
pub fn participants(c: &Configuration) -> BTreeSet<ProcessId> {
    c.processes().filter(|&p| c.proc(p).has_stepped()).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowsSets {
    pub k1: BTreeSet<Pair>,
    pub k2: BTreeSet<Pair>,
    pub k3: BTreeSet<Pair>,
}

impl KnowsSets {
    pub fn union(&self) -> BTreeSet<Pair> {
        self.k1.iter().chain(&self.k2).chain(&self.k3).copied().collect()
    }
}

pub fn knows_components(c: &Configuration) -> KnowsSets {
    let mut out = KnowsSets::default();
    let mut segment_readers: BTreeSet<Pair> = BTreeSet::new();
    for s in c.trace() {
        match s.action {
            StepAction::Read { register, value } => {
                if let Some(q) = value.visible() {
                    if q != s.actor {
                        out.k1.insert((s.actor, q));
                    }
                }
                if register.owner != s.actor {
                    segment_readers.insert((s.actor, register.owner));
                }
            }
            StepAction::Write { register, .. } => {
                let p = register.owner;
                if p != s.actor && c.proc(p).has_stepped() {
                    let before_term = match c.proc(p).term_reads.get(&register) {
                        Some(&t) => s.seq < t,
                        None => true,
                    };
                    if before_term {
                        out.k3.insert((p, s.actor));
                    }
                }
            }
            StepAction::AbortSignal => {}
        }
    }
    out.k2 = segment_readers.into_iter().filter(|&(_, q)| c.proc(q).has_stepped()).collect();
    out
}

/// `K(C)`.
pub fn knows_set(c: &Configuration) -> BTreeSet<Pair> {
    knows_components(c).union()
}

struct Access {
    seq: u64,
    actor: ProcessId,
    write: bool,
}

fn accesses_by_register(trace: &[ExecutionStep]) -> BTreeMap<RegisterId, Vec<Access>> {
    let mut map: BTreeMap<RegisterId, Vec<Access>> = BTreeMap::new();
    for s in trace {
        if let Some(r) = s.action.register() {
            map.entry(r).or_default().push(Access { seq: s.seq, actor: s.actor, write: s.action.is_write() });
        }
    }
    map
}

/// Whether `p ∈ H_r(C)` given the accesses to `r` in trace order. The access
/// point of the first rule is `p`'s last access of `r`.
fn hidden_on(p: ProcessId, r: RegisterId, acc: &[Access], lost: &BTreeSet<ProcessId>) -> bool {
    if r.owner == p {
        return acc.iter().filter(|a| a.write && a.actor != p).all(|a| lost.contains(&a.actor));
    }
    let Some(t) = acc.iter().rev().find(|a| a.actor == p).map(|a| a.seq) else {
        return true;
    };
    let mut later = acc.iter().filter(|a| a.write && a.seq > t).peekable();
    if later.peek().is_none() {
        return true;
    }
    later.any(|a| lost.contains(&a.actor))
}

/// `H_r(C)` for one register.
pub fn hidden_on_register(c: &Configuration, r: RegisterId) -> BTreeSet<ProcessId> {
    let lost = lost_set(c);
    let map = accesses_by_register(c.trace());
    let acc = map.get(&r).map(Vec::as_slice).unwrap_or(&[]);
    c.processes().filter(|&p| hidden_on(p, r, acc, &lost)).collect()
}

/// `H(C)`. Registers nobody touched hide everyone, so only accessed ones are
/// inspected.
pub fn hidden_set(c: &Configuration) -> BTreeSet<ProcessId> {
    let lost = lost_set(c);
    let map = accesses_by_register(c.trace());
    c.processes()
        .filter(|&p| map.iter().all(|(&r, acc)| hidden_on(p, r, acc, &lost)))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SafetyReport {
    /// Pairs of `K(C)` whose second component has not lost.
    pub s1_violations: Vec<Pair>,
    /// Participants that are neither hidden nor lost.
    pub s2_violations: Vec<ProcessId>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.s1_violations.is_empty() && self.s2_violations.is_empty()
    }
}

pub fn safety_report(c: &Configuration) -> SafetyReport {
    let lost = lost_set(c);
    let s1_violations = knows_set(c).into_iter().filter(|(_, q)| !lost.contains(q)).collect();
    let hidden = hidden_set(c);
    let s2_violations = c
        .processes()
        .filter(|p| !hidden.contains(p) && !lost.contains(p) && c.proc(*p).has_stepped())
        .collect();
    SafetyReport { s1_violations, s2_violations }
}

pub fn is_safe(c: &Configuration) -> bool {
    safety_report(c).is_safe()
}

/// `C ∼_Q D`: equal histories for every member of `q` and equal memory.
/// RMR annotations are cost bookkeeping, not observations, and are ignored.
pub fn indistinguishable(c: &Configuration, d: &Configuration, q: &BTreeSet<ProcessId>) -> bool {
    let regs: BTreeSet<RegisterId> = c.written_registers().keys().chain(d.written_registers().keys()).copied().collect();
    if regs.iter().any(|&r| c.value(r) != d.value(r)) {
        return false;
    }
    q.iter().all(|&p| {
        let a = c.trace().iter().filter(|s| s.actor == p).map(|s| s.action);
        let b = d.trace().iter().filter(|s| s.actor == p).map(|s| s.action);
        a.eq(b)
    })
}

/// `RMR_p(E)` for every `p ∈ P`.
pub fn rmr_counts(trace: &[ExecutionStep], procs: &BTreeSet<ProcessId>) -> BTreeMap<ProcessId, u64> {
    let mut out: BTreeMap<ProcessId, u64> = procs.iter().map(|&p| (p, 0)).collect();
    for s in trace {
        if s.is_rmr {
            if let Some(n) = out.get_mut(&s.actor) {
                *n += 1;
            }
        }
    }
    out
}

pub fn rmr_of(trace: &[ExecutionStep], p: ProcessId) -> u64 {
    trace.iter().filter(|s| s.actor == p && s.is_rmr).count() as u64
}

pub fn total_rmr(trace: &[ExecutionStep]) -> u64 {
    trace.iter().filter(|s| s.is_rmr).count() as u64
}

/// Pairs `(p, q)` of `P` such that `q` writes, during `exec`, a register in
/// `ℛ_p ∪ Cache_p(C)` where `C` is the configuration `exec` starts from.
pub fn overwrite_pairs(c: &Configuration, exec: &[ExecutionStep], procs: &BTreeSet<ProcessId>) -> BTreeSet<Pair> {
    let caches: BTreeMap<ProcessId, BTreeSet<RegisterId>> = procs.iter().map(|&p| (p, cache_set(c, p))).collect();
    let mut out = BTreeSet::new();
    for s in exec {
        let (StepAction::Write { register, .. }, true) = (s.action, procs.contains(&s.actor)) else {
            continue;
        };
        for (&p, cache) in &caches {
            if p != s.actor && (register.owner == p || cache.contains(&register)) {
                out.insert((p, s.actor));
            }
        }
    }
    out
}
