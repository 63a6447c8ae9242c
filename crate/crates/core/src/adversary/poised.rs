use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::analysis::{cache_set, lost_set};
use crate::model::{Configuration, ExecutionStep, Model, ProcessId, RegisterId, Ret, Schedule, ScheduleItem};

use super::AdversaryError;

/// `Conf(Γ, Sched(C) | keep)`.
pub fn project(model: &Model, c: &Configuration, keep: &BTreeSet<ProcessId>) -> Result<Configuration, AdversaryError> {
    Ok(model.run(&c.lineage().project(keep))?)
}

/// First member of `keep` whose history or cache differs between `c` and
/// its projection `d`.
pub fn erasure_changed(c: &Configuration, d: &Configuration, keep: &BTreeSet<ProcessId>) -> Option<ProcessId> {
    keep.iter().copied().find(|&p| c.history(p) != d.history(p) || cache_set(c, p) != cache_set(d, p))
}

/// Projects and insists that the surviving processes cannot tell.
pub fn project_checked(
    model: &Model,
    c: &Configuration,
    keep: &BTreeSet<ProcessId>,
    what: &str,
) -> Result<Configuration, AdversaryError> {
    let d = project(model, c, keep)?;
    if let Some(p) = erasure_changed(c, &d, keep) {
        return Err(AdversaryError::Internal(format!("{what}: erasure changed the history or cache of {p}")));
    }
    Ok(d)
}

/// `Proc(Sched(C)) \ L(C)`.
pub fn active(c: &Configuration) -> BTreeSet<ProcessId> {
    let lost = lost_set(c);
    c.lineage().procs().into_iter().filter(|p| !lost.contains(p)).collect()
}

/// How a zero-RMR solo run ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoloEnd {
    /// The next step would be remote.
    Poised,
    Terminated(Ret),
}

/// Runs `p` alone from `c` for as long as its steps stay local. Returns the
/// number of steps taken and how the run ended.
pub fn zero_rmr_prefix(model: &Model, c: &Configuration, p: ProcessId) -> Result<(usize, SoloEnd), AdversaryError> {
    let mut x = c.clone();
    let mut t = 0;
    loop {
        if let Some(ret) = x.status(p).ret() {
            return Ok((t, SoloEnd::Terminated(ret)));
        }
        let mut y = x.clone();
        let Some(step) = model.step(&mut y, ScheduleItem::Step(p))? else {
            return Err(AdversaryError::Internal(format!("{p} cannot step")));
        };
        if step.is_rmr {
            return Ok((t, SoloEnd::Poised));
        }
        x = y;
        t += 1;
    }
}

#[derive(Clone, Debug)]
pub struct Extension {
    /// `D_i`.
    pub config: Configuration,
    /// `P_i'`.
    pub population: BTreeSet<ProcessId>,
    /// `λ_i`.
    pub lambda: Schedule,
    /// The process erased for winning solo without an RMR, if any.
    pub winner: Option<ProcessId>,
}

/// Lets every active process of `c` run solo until it is poised to incur an
/// RMR. A process that would finish on local steps alone is erased from the
/// whole execution; there can be at most one.
pub fn extend_to_poised(
    model: &Model,
    c: &Configuration,
    population: &BTreeSet<ProcessId>,
) -> Result<Extension, AdversaryError> {
    let runners = active(c);
    let mut solos: Vec<(ProcessId, usize)> = Vec::new();
    let mut winner = None;
    for &q in &runners {
        match zero_rmr_prefix(model, c, q)? {
            (t, SoloEnd::Poised) => solos.push((q, t)),
            (_, SoloEnd::Terminated(Ret::Win)) => {
                if let Some(w) = winner {
                    return Err(AdversaryError::Subject(format!("{w} and {q} both win solo without an RMR")));
                }
                winner = Some(q);
            }
            (_, SoloEnd::Terminated(r)) => {
                return Err(AdversaryError::Subject(format!("{q} returns {r} in a zero-RMR solo run")));
            }
        }
    }
    let mut kept = population.clone();
    let start = match winner {
        Some(w) => {
            kept.remove(&w);
            project_checked(model, c, &kept, "winner erasure")?
        }
        None => c.clone(),
    };
    let mut lambda = Schedule::new();
    for &(q, t) in &solos {
        for _ in 0..t {
            lambda.step(q);
        }
    }
    let (d, exec) = model.apply(&start, &lambda)?;
    if exec.total_rmr() != 0 {
        return Err(AdversaryError::Internal("the poising extension incurred an RMR".into()));
    }
    Ok(Extension { config: d, population: kept, lambda, winner })
}

/// `R_i(r)` and `W_i(r)` for every register, plus each process's next step.
#[derive(Clone, Debug, Default)]
pub struct PoisedMap {
    pub readers: BTreeMap<RegisterId, BTreeSet<ProcessId>>,
    pub writers: BTreeMap<RegisterId, BTreeSet<ProcessId>>,
    pub steps: BTreeMap<ProcessId, ExecutionStep>,
}

impl PoisedMap {
    /// Records the next step of every process in `procs`; each must be an RMR.
    pub fn build(model: &Model, c: &Configuration, procs: &BTreeSet<ProcessId>) -> Result<Self, AdversaryError> {
        let mut out = PoisedMap::default();
        for &p in procs {
            let step = model
                .peek(c, p)?
                .ok_or_else(|| AdversaryError::Internal(format!("{p} is not poised: it has halted")))?;
            let Some(r) = step.action.register().filter(|_| step.is_rmr) else {
                return Err(AdversaryError::Internal(format!("{p} is not poised to incur an RMR")));
            };
            let side = if step.action.is_write() { &mut out.writers } else { &mut out.readers };
            side.entry(r).or_default().insert(p);
            out.steps.insert(p, step);
        }
        Ok(out)
    }

    /// `S_i`.
    pub fn registers(&self) -> BTreeSet<RegisterId> {
        self.readers.keys().chain(self.writers.keys()).copied().collect()
    }

    /// `X_i`.
    pub fn all_writers(&self) -> BTreeSet<ProcessId> {
        self.writers.values().flatten().copied().collect()
    }

    /// `Y_i`.
    pub fn all_readers(&self) -> BTreeSet<ProcessId> {
        self.readers.values().flatten().copied().collect()
    }

    pub fn target(&self, p: ProcessId) -> Option<RegisterId> {
        self.steps.get(&p).and_then(|s| s.action.register())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTaken {
    Base,
    LowContention,
    HighContention,
    Exhausted,
}

/// Low contention iff `|S| ≥ |P| / (10ℓ)` or `|X| < |Y|`.
pub fn classify(map: &PoisedMap, population: usize, ell: u32) -> CaseTaken {
    let many_registers = map.registers().len() as u64 * 10 * u64::from(ell) >= population as u64;
    if many_registers || map.all_writers().len() < map.all_readers().len() {
        CaseTaken::LowContention
    } else {
        CaseTaken::HighContention
    }
}
