use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::explorer::valency::{find_both_lose, solo_run, BothLoseError, SOLO_LIMIT};
use crate::explorer::ExplorationBudget;
use crate::model::analysis::{hidden_on_register, is_safe, lost_set, rmr_counts, rmr_of};
use crate::model::{Configuration, Model, ProcessId, RegisterId, Schedule, ScheduleItem, StepAction};

use super::poised::{active, project_checked, PoisedMap};
use super::{AdversaryError, Checks};

/// What happened on one poised-to register.
#[derive(Clone, Debug, Serialize)]
pub struct RegisterRecord {
    pub register: RegisterId,
    pub writers: usize,
    /// Writers too few to be worth a pair; they were erased.
    pub dropped: bool,
    pub pair: Option<(ProcessId, ProcessId)>,
    pub erased: Vec<ProcessId>,
    pub z_max: usize,
    pub y: usize,
    pub both_lose: Option<Schedule>,
    pub both_lose_nodes: usize,
}

#[derive(Clone, Debug)]
pub struct HighOutcome {
    pub config: Configuration,
    pub q: BTreeSet<ProcessId>,
    pub registers: Vec<RegisterRecord>,
    pub checks: Checks,
    /// Largest per-process RMR count seen in any run made while working.
    pub rmr_seen: u64,
    pub notes: Vec<String>,
}

/// Processes other than `p` that `p` would learn about in its solo run from
/// `c`: owners of the registers it reads and processes visible on them.
fn z_set(model: &Model, c: &Configuration, p: ProcessId, pop: &BTreeSet<ProcessId>) -> Result<(BTreeSet<ProcessId>, u64), AdversaryError> {
    let solo = solo_run(model, c, p, SOLO_LIMIT)?;
    if solo.ret.is_none() {
        return Err(AdversaryError::Subject(format!("{p} does not finish its solo run within {SOLO_LIMIT} steps")));
    }
    let reads = read_registers(&solo.config.trace()[c.trace().len()..], &[p]);
    Ok((touched(c, &reads, pop, &[p]), rmr_of(solo.config.trace(), p)))
}

fn read_registers(exec: &[crate::model::ExecutionStep], by: &[ProcessId]) -> BTreeSet<RegisterId> {
    exec.iter()
        .filter(|s| by.contains(&s.actor))
        .filter_map(|s| match s.action {
            StepAction::Read { register, .. } => Some(register),
            _ => None,
        })
        .collect()
}

fn touched(c: &Configuration, regs: &BTreeSet<RegisterId>, pop: &BTreeSet<ProcessId>, except: &[ProcessId]) -> BTreeSet<ProcessId> {
    let mut out = BTreeSet::new();
    for &r in regs {
        out.insert(r.owner);
        if let Some(q) = c.value(r).visible() {
            out.insert(q);
        }
    }
    out.retain(|q| pop.contains(q) && !except.contains(q));
    out
}

struct Claim {
    config: Configuration,
    record: RegisterRecord,
    checks: Checks,
    rmr_seen: u64,
    notes: Vec<String>,
}

/// Lets all but two writers of `r` write, then has the two overwrite them
/// and lose, after erasing everyone the two could learn about. `ell` only
/// feeds the hypothesis notes.
fn both_writers_lose(
    model: &Model,
    c: &Configuration,
    r: RegisterId,
    writers: &BTreeSet<ProcessId>,
    ell: u32,
    budget: ExplorationBudget,
) -> Result<Claim, AdversaryError> {
    let pop = active(c);
    let lost = lost_set(c);
    let mut checks = Checks::default();
    let mut notes = Vec::new();
    let mut rmr_seen = 0;

    let mut z: BTreeMap<ProcessId, BTreeSet<ProcessId>> = BTreeMap::new();
    for &p in writers {
        let (zp, rmr) = z_set(model, c, p, &pop)?;
        rmr_seen = rmr_seen.max(rmr);
        z.insert(p, zp);
    }
    let z_max = z.values().map(BTreeSet::len).max().unwrap_or(0);
    if z_max > 2 * ell as usize {
        notes.push(format!("on {r} a solo writer would learn about {z_max} processes, more than 2ℓ = {}", 2 * ell));
    }
    let pair = writers.iter().find_map(|&a| {
        writers.range(a..).skip(1).find(|&&b| !z[&a].contains(&b) && !z[&b].contains(&a)).map(|&b| (a, b))
    });
    let Some((a, b)) = pair else {
        return Err(AdversaryError::Internal(format!("no writer pair on {r} is mutually unaware")));
    };

    let mut pair_keep = lost.clone();
    pair_keep.extend([a, b]);
    let mut da = project_checked(model, c, &pair_keep, "restriction to the writer pair")?;
    model.step(&mut da, ScheduleItem::Step(a))?;
    let found = find_both_lose(model, &da, a, b, budget).map_err(|e| match e {
        BothLoseError::Model(m) => AdversaryError::Model(m),
        BothLoseError::PreconditionViolated(why) => {
            AdversaryError::Subject(format!("both-lose search on {r} for ({a}, {b}): {why}"))
        }
    })?;
    let Some(lambda) = found.schedule else {
        return Err(AdversaryError::BothLoseNotFound { register: r, a, b, nodes: found.nodes });
    };
    let (after_lambda, _) = model.apply(&da, &lambda)?;
    let reads = read_registers(&after_lambda.trace()[da.trace().len()..], &[a, b]);
    let y = touched(c, &reads, &pop, &[a, b]);
    if y.len() > 4 * ell as usize {
        notes.push(format!("on {r} the losing pair reads registers tied to {} processes, more than 4ℓ = {}", y.len(), 4 * ell));
    }
    rmr_seen = rmr_seen.max(rmr_of(after_lambda.trace(), a)).max(rmr_of(after_lambda.trace(), b));

    let mut x: BTreeSet<ProcessId> = z[&a].union(&z[&b]).chain(&y).copied().collect();
    x.insert(r.owner);
    x.retain(|q| pop.contains(q));
    let keep: BTreeSet<ProcessId> = pop.difference(&x).chain(&lost).chain([&a, &b]).copied().collect();
    let c1 = project_checked(model, c, &keep, "erasure around the writer pair")?;
    let others: Vec<ProcessId> = writers.iter().copied().filter(|q| !x.contains(q) && *q != a && *q != b).collect();
    let mut sigma: Schedule = others.iter().map(|&q| ScheduleItem::Step(q)).collect();
    sigma.step(a);
    let sigma = sigma.concat(&lambda);
    let (config, exec) = model.apply(&c1, &sigma)?;

    let now_lost = lost_set(&config);
    checks.push("pair loses", now_lost.contains(&a) && now_lost.contains(&b));
    let one_step = others.iter().all(|&q| {
        let mine: Vec<_> = exec.iter().filter(|s| s.actor == q).collect();
        mine.len() == 1 && mine[0].is_rmr && mine[0].action.is_write() && mine[0].action.register() == Some(r)
    });
    checks.push("other writers take one RMR write", one_step);
    let hidden = hidden_on_register(&config, r);
    checks.push("other writers hidden on the register", others.iter().all(|q| hidden.contains(q)));
    checks.push("pair result is safe", is_safe(&config));
    checks.push("only the pair is aborted", exec.iter().filter(|s| s.action == StepAction::AbortSignal).all(|s| s.actor == a || s.actor == b));
    checks.push("at most two new losers", now_lost.difference(&lost).count() <= 2);
    if x.len() > 8 * ell as usize + 1 {
        notes.push(format!("on {r} {} processes were erased, more than 8ℓ + 1 = {}", x.len(), 8 * ell + 1));
    }

    let record = RegisterRecord {
        register: r,
        writers: writers.len(),
        dropped: false,
        pair: Some((a, b)),
        erased: x.into_iter().collect(),
        z_max,
        y: y.len(),
        both_lose: Some(lambda),
        both_lose_nodes: found.nodes,
    };
    Ok(Claim { config, record, checks, rmr_seen, notes })
}

pub fn high_contention_round(
    model: &Model,
    d: &Configuration,
    map: &PoisedMap,
    ell: u32,
    ell_hyp: u32,
    budget: ExplorationBudget,
) -> Result<HighOutcome, AdversaryError> {
    let p = active(d);
    let lost = lost_set(d);
    let mut checks = Checks::default();
    let mut notes = Vec::new();
    let mut rmr_seen = 0;
    let mut registers = Vec::new();

    let keep: BTreeSet<ProcessId> = map.all_writers().union(&lost).copied().collect();
    let mut c = project_checked(model, d, &keep, "restriction to writers")?;
    let threshold = (8 * i64::from(ell) - 1).max(0) as usize;
    for (&r, ws) in &map.writers {
        let pop = active(&c);
        let writers: BTreeSet<ProcessId> = ws.intersection(&pop).copied().collect();
        if writers.len() < threshold || writers.len() < 2 {
            let keep: BTreeSet<ProcessId> = pop.difference(&writers).chain(&lost_set(&c)).copied().collect();
            c = project_checked(model, &c, &keep, "dropping a thin register")?;
            registers.push(RegisterRecord {
                register: r,
                writers: writers.len(),
                dropped: true,
                pair: None,
                erased: writers.into_iter().collect(),
                z_max: 0,
                y: 0,
                both_lose: None,
                both_lose_nodes: 0,
            });
            continue;
        }
        let claim = both_writers_lose(model, &c, r, &writers, ell_hyp, budget)?;
        checks.extend(claim.checks);
        notes.extend(claim.notes);
        rmr_seen = rmr_seen.max(claim.rmr_seen);
        registers.push(claim.record);
        c = claim.config;
    }

    let q = active(&c);
    checks.push("result is safe", is_safe(&c));
    checks.push("survivor bound", q.len() as f64 >= p.len() as f64 / 10.0);
    let before = rmr_counts(d.trace(), &q);
    let now = rmr_counts(c.trace(), &q);
    checks.push("one RMR per survivor", q.iter().all(|x| now[x] == before[x] + 1));
    let now_lost = lost_set(&c);
    checks.push("every aborted process lost", c.lineage().aborted().iter().all(|x| now_lost.contains(x)));
    Ok(HighOutcome { config: c, q, registers, checks, rmr_seen, notes })
}
