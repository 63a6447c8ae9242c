//! The round-by-round adversary against abortable leader election: keeps a
//! large set of processes running and unaware of each other while forcing
//! one RMR per survivor per round.

pub mod graph;
pub mod high;
pub mod low;
pub mod poised;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::explorer::ExplorationBudget;
use crate::model::analysis::{is_safe, lost_set, rmr_counts, rmr_of, total_rmr};
use crate::model::{Algorithm, Configuration, Model, ModelError, ModelOptions, ProcessId, RegisterId, Schedule};

pub use graph::{ConflictGraph, EdgeRule, TuranMode};
pub use high::{high_contention_round, HighOutcome, RegisterRecord};
pub use low::{low_contention_round, select_v, LowOutcome};
pub use poised::{active, classify, extend_to_poised, project, CaseTaken, Extension, PoisedMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// The subject broke an assumption every correct abortable leader
    /// election satisfies.
    #[error("subject misbehaved: {0}")]
    Subject(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
    #[error("no both-lose schedule for ({a}, {b}) on {register} within budget ({nodes} states)")]
    BothLoseNotFound { register: RegisterId, a: ProcessId, b: ProcessId, nodes: usize },
}

/// A round failure together with the schedule of the configuration the round
/// started from, so the state can be replayed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("round {round}: {source}")]
pub struct RunError {
    pub round: usize,
    pub schedule: Schedule,
    #[source]
    pub source: AdversaryError,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
}

/// Named pass/fail results of the per-round side conditions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn push(&mut self, name: &str, ok: bool) {
        self.0.push(Check { name: name.to_string(), ok });
    }

    pub fn extend(&mut self, other: Checks) {
        self.0.extend(other.0);
    }

    pub fn all_ok(&self) -> bool {
        self.0.iter().all(|c| c.ok)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.0.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        let mut hits = self.0.iter().filter(|c| c.name == name).peekable();
        hits.peek()?;
        Some(hits.all(|c| c.ok))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversaryParams {
    pub c: u32,
    pub ell_override: Option<u32>,
    /// Inductive rounds to attempt; defaults to `ℓ`.
    pub rounds: Option<usize>,
    pub turan_mode: TuranMode,
    pub both_lose_budget: ExplorationBudget,
    pub step_ceiling: u64,
    /// Recorded in the report; the construction itself is deterministic.
    pub seed: u64,
}

impl Default for AdversaryParams {
    fn default() -> Self {
        AdversaryParams {
            c: 10,
            ell_override: None,
            rounds: None,
            turan_mode: TuranMode::Greedy,
            both_lose_budget: ExplorationBudget::new(60, 2_000_000),
            step_ceiling: 100_000,
            seed: 0,
        }
    }
}

/// `⌊log n / (c log log n)⌋` with binary logarithms; 0 below `n = 4`.
pub fn ell_formula(n: usize, c: u32) -> u32 {
    if n < 4 || c == 0 {
        return 0;
    }
    let log = (n as f64).log2();
    (log / (f64::from(c) * log.log2())).floor() as u32
}

#[derive(Clone, Debug)]
pub struct RoundState {
    pub i: usize,
    pub sigma: Schedule,
    pub population: BTreeSet<ProcessId>,
    pub config: Configuration,
    pub case: CaseTaken,
}

impl RoundState {
    pub fn lost(&self) -> BTreeSet<ProcessId> {
        lost_set(&self.config)
    }

    /// `P_i \ L_i`.
    pub fn survivors(&self) -> BTreeSet<ProcessId> {
        let lost = self.lost();
        self.population.iter().copied().filter(|p| !lost.contains(p)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Invariants {
    #[serde(rename = "I1")]
    pub i1: bool,
    #[serde(rename = "I2")]
    pub i2: bool,
    #[serde(rename = "I3")]
    pub i3: bool,
    #[serde(rename = "I4")]
    pub i4: bool,
    #[serde(rename = "I5")]
    pub i5: bool,
}

impl Invariants {
    pub fn all(&self) -> bool {
        self.i1 && self.i2 && self.i3 && self.i4 && self.i5
    }
}

/// Evaluates the five round invariants, with `bound` as the required number
/// of survivors.
pub fn check_invariants(state: &RoundState, bound: f64) -> Invariants {
    let live = state.survivors();
    let rmr = rmr_counts(state.config.trace(), &live);
    let i = state.i as u64;
    let k = live.len() as u64;
    Invariants {
        i1: is_safe(&state.config),
        i2: live.len() as f64 >= bound,
        i3: rmr.values().sum::<u64>() + i >= i * k,
        i4: rmr.values().all(|&x| x <= i),
        i5: live.iter().all(|&p| !state.sigma.contains_abort_of(p)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub i: usize,
    pub case: CaseTaken,
    pub pop_before: usize,
    pub pop_after: usize,
    /// Processes that lost during this round.
    pub losers: Vec<ProcessId>,
    /// Processes removed from the execution during this round.
    pub erased: Vec<ProcessId>,
    pub rmr_total: u64,
    pub invariants: Invariants,
    /// Survivor count the round had to reach.
    pub population_bound: f64,
    /// `(n - 1) / log^(c·i) n`.
    pub asymptotic_bound: f64,
    /// Every survivor has exactly `i` RMRs.
    pub exact_rmr: bool,
    pub rmr_histogram: BTreeMap<u64, usize>,
    pub solo_winner: Option<ProcessId>,
    pub poised_registers: usize,
    pub poised_writers: usize,
    pub poised_readers: usize,
    pub checks: Checks,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub registers: Vec<RegisterRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    RoundLimit,
    Population,
    Exhausted,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Survivor {
    pub process: ProcessId,
    pub rmr: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdversaryReport {
    pub subject: String,
    pub n: usize,
    pub c: u32,
    pub ell: u32,
    /// `ℓ` raised to the largest per-process RMR count observed.
    pub ell_effective: u32,
    pub seed: u64,
    pub degenerate: bool,
    pub rounds_requested: usize,
    pub rounds_completed: usize,
    pub termination: Termination,
    pub rounds: Vec<RoundReport>,
    pub survivors: Vec<Survivor>,
    pub witness_schedules: Vec<Schedule>,
    pub hypothesis_violations: Vec<String>,
}

impl AdversaryReport {
    pub fn invariants_hold(&self) -> bool {
        self.rounds.iter().all(|r| r.invariants.all())
    }

    pub fn checks_hold(&self) -> bool {
        self.rounds.iter().all(|r| r.checks.all_ok())
    }

    /// Per-round RMR histogram of the survivors as `round,rmr,processes`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("round,rmr,processes\n");
        for r in &self.rounds {
            for (rmr, count) in &r.rmr_histogram {
                let _ = writeln!(out, "{},{},{}", r.i, rmr, count);
            }
        }
        out
    }
}

/// The model the adversary drives: own-segment scans come before the
/// invocation read.
pub fn adversary_model(alg: Arc<dyn Algorithm>, params: &AdversaryParams) -> Model {
    Model::with_options(alg, ModelOptions { scan_prefix: true, step_ceiling: params.step_ceiling })
}

/// `σ_0`: every process scans its own segment, in id order.
pub fn base_case(model: &Model) -> Result<RoundState, ModelError> {
    let start = model.initial();
    let mut sigma = Schedule::new();
    for p in start.processes() {
        for _ in 0..start.segment_size(p) {
            sigma.step(p);
        }
    }
    let config = model.run(&sigma)?;
    let population = start.processes().collect();
    Ok(RoundState { i: 0, sigma, population, config, case: CaseTaken::Base })
}

fn histogram(c: &Configuration, live: &BTreeSet<ProcessId>) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for p in live {
        *h.entry(rmr_of(c.trace(), *p)).or_insert(0) += 1;
    }
    h
}

fn asymptotic_bound(n: usize, c: u32, i: usize) -> f64 {
    let log = (n as f64).log2();
    (n as f64 - 1.0) / log.powf(f64::from(c) * i as f64)
}

fn max_rmr(c: &Configuration) -> u64 {
    c.processes().map(|p| rmr_of(c.trace(), p)).max().unwrap_or(0)
}

struct Step {
    state: RoundState,
    report: RoundReport,
    rmr_seen: u64,
    notes: Vec<String>,
}

fn round(model: &Model, prev: &RoundState, ell: u32, ell_hyp: u32, params: &AdversaryParams) -> Result<Step, AdversaryError> {
    let pop_before = prev.survivors().len();
    let ext = extend_to_poised(model, &prev.config, &prev.population)?;
    let d = &ext.config;
    let mut checks = Checks::default();
    checks.push("poised configuration is safe", is_safe(d));
    let p = active(d);
    let before = rmr_counts(prev.config.trace(), &p);
    let after = rmr_counts(d.trace(), &p);
    checks.push("poising keeps RMR counts", before == after);
    let map = PoisedMap::build(model, d, &p)?;
    let lost_before = prev.lost();
    let case = if p.is_empty() { CaseTaken::Exhausted } else { classify(&map, p.len(), ell) };
    let mut notes = Vec::new();
    let mut rmr_seen = max_rmr(d);
    let (config, bound, registers) = match case {
        CaseTaken::LowContention => {
            let out = low_contention_round(model, d, &map, ell, params.turan_mode)?;
            checks.extend(out.checks);
            (out.config, p.len() as f64 / (60.0 * f64::from(ell).powi(2)) - 1.0, Vec::new())
        }
        CaseTaken::HighContention => {
            let out = high_contention_round(model, d, &map, ell, ell_hyp, params.both_lose_budget)?;
            checks.extend(out.checks);
            notes.extend(out.notes);
            rmr_seen = rmr_seen.max(out.rmr_seen);
            (out.config, p.len() as f64 / 10.0, out.registers)
        }
        CaseTaken::Exhausted | CaseTaken::Base => (d.clone(), 0.0, Vec::new()),
    };
    rmr_seen = rmr_seen.max(max_rmr(&config));
    let population: BTreeSet<ProcessId> = config.lineage().procs();
    let state = RoundState { i: prev.i + 1, sigma: config.lineage().clone(), population, config, case };
    let live = state.survivors();
    let invariants = check_invariants(&state, bound);
    let i = state.i as u64;
    let report = RoundReport {
        i: state.i,
        case,
        pop_before,
        pop_after: live.len(),
        losers: state.lost().difference(&lost_before).copied().collect(),
        erased: prev.population.difference(&state.population).copied().collect(),
        rmr_total: total_rmr(state.config.trace()),
        invariants,
        population_bound: bound,
        asymptotic_bound: asymptotic_bound(model.n(), params.c, state.i),
        exact_rmr: live.iter().all(|&x| rmr_of(state.config.trace(), x) == i),
        rmr_histogram: histogram(&state.config, &live),
        solo_winner: ext.winner,
        poised_registers: map.registers().len(),
        poised_writers: map.all_writers().len(),
        poised_readers: map.all_readers().len(),
        checks,
        registers,
    };
    Ok(Step { state, report, rmr_seen, notes })
}

/// Runs the base case and then inductive rounds until the round limit, until
/// fewer than two processes survive, or until no process is left poised.
pub fn run(alg: Arc<dyn Algorithm>, params: &AdversaryParams) -> Result<AdversaryReport, RunError> {
    assert!(params.c >= 1, "c must be positive");
    let model = adversary_model(alg.clone(), params);
    let n = model.n();
    let ell = params.ell_override.unwrap_or_else(|| ell_formula(n, params.c));
    let degenerate = ell == 0;
    let rounds_requested = if degenerate { 0 } else { params.rounds.unwrap_or(ell as usize) };
    let wrap = |round: usize, schedule: &Schedule, source: AdversaryError| RunError {
        round,
        schedule: schedule.clone(),
        source,
    };

    let mut state = base_case(&model).map_err(|e| wrap(0, &Schedule::new(), e.into()))?;
    let live = state.survivors();
    let base_bound = n as f64 - 1.0;
    let mut rounds = vec![RoundReport {
        i: 0,
        case: CaseTaken::Base,
        pop_before: n,
        pop_after: live.len(),
        losers: Vec::new(),
        erased: Vec::new(),
        rmr_total: total_rmr(state.config.trace()),
        invariants: check_invariants(&state, base_bound),
        population_bound: base_bound,
        asymptotic_bound: asymptotic_bound(n, params.c, 0),
        exact_rmr: live.iter().all(|&x| rmr_of(state.config.trace(), x) == 0),
        rmr_histogram: histogram(&state.config, &live),
        solo_winner: None,
        poised_registers: 0,
        poised_writers: 0,
        poised_readers: 0,
        checks: Checks::default(),
        registers: Vec::new(),
    }];
    let mut witness_schedules = vec![state.sigma.clone()];
    let mut hypothesis_violations = Vec::new();
    let mut ell_effective = ell;
    let mut termination = if degenerate { Termination::Degenerate } else { Termination::RoundLimit };
    let mut completed = 0;

    while !degenerate && completed < rounds_requested {
        if state.survivors().len() < 2 {
            termination = Termination::Population;
            break;
        }
        let step = round(&model, &state, ell, ell_effective, params).map_err(|e| wrap(state.i + 1, &state.sigma, e))?;
        if step.rmr_seen > u64::from(ell_effective) {
            hypothesis_violations.push(format!(
                "round {}: a process incurred {} RMRs, more than ℓ = {}",
                step.state.i, step.rmr_seen, ell_effective
            ));
            ell_effective = step.rmr_seen as u32;
        }
        hypothesis_violations.extend(step.notes.into_iter().map(|m| format!("round {}: {m}", step.state.i)));
        let exhausted = step.state.case == CaseTaken::Exhausted;
        witness_schedules.push(step.state.sigma.clone());
        rounds.push(step.report);
        state = step.state;
        if exhausted {
            termination = Termination::Exhausted;
            break;
        }
        completed += 1;
    }
    if termination == Termination::RoundLimit && completed < rounds_requested {
        termination = Termination::Population;
    }

    let survivors =
        state.survivors().into_iter().map(|p| Survivor { process: p, rmr: rmr_of(state.config.trace(), p) }).collect();
    Ok(AdversaryReport {
        subject: alg.name().to_string(),
        n,
        c: params.c,
        ell,
        ell_effective,
        seed: params.seed,
        degenerate,
        rounds_requested,
        rounds_completed: completed,
        termination,
        rounds,
        survivors,
        witness_schedules,
        hypothesis_violations,
    })
}
