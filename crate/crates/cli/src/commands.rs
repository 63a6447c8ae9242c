use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use rmrlab_core::adversary::{self, AdversaryParams};
use rmrlab_core::explorer::checkers::{
    check_bounded_abort, check_deadlock_freedom, check_le_safety_exhaustive, le_safety_violation, FairnessOptions,
};
use rmrlab_core::explorer::linearizability::name_decide_violation;
use rmrlab_core::explorer::{
    check_linearizable_cas, classify_bivalence, explore_cas, explore_name_decide, AbortMode, ExplorationBudget, Verdict,
};
use rmrlab_core::model::serial::{snapshot_json, trace_json};
use rmrlab_core::model::{Algorithm, Configuration, Model, ModelError, ProcessId, Schedule, ScheduleItem};
use rmrlab_core::objects::cas::history;
use rmrlab_core::objects::{cas_demo, default_n, subject, CasDemo, RegistryError};

use crate::config::{CheckKind, RunConfig, ScheduleSpec};
use crate::error::{CliError, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_VIOLATION};

const DEFAULT_MAX_STEPS: u64 = 100_000;
const DEFAULT_ABORT_BOUND: u64 = 20;
const DEFAULT_DEPTH: usize = 40;
const DEFAULT_NODES: usize = 5_000_000;

struct Subject {
    name: String,
    n: usize,
    alg: Arc<dyn Algorithm>,
    cas: Option<CasDemo>,
}

fn load_subject(cfg: &RunConfig) -> Result<Subject, CliError> {
    let name = cfg.subject.clone().ok_or_else(|| CliError::Usage("no subject given".into()))?;
    let n = cfg.n.or_else(|| default_n(&name)).unwrap_or(2);
    let alg = subject(&name, n).map_err(|e| match e {
        RegistryError::Unknown(_) => CliError::Usage(e.to_string()),
        RegistryError::BadSize { .. } => CliError::Config(e.to_string()),
    })?;
    let cas = cas_demo(&name, n);
    Ok(Subject { name, n, alg, cas })
}

fn default_check(name: &str) -> CheckKind {
    if name.starts_with("cas-") {
        CheckKind::Linearizable
    } else if name == "name-decide" {
        CheckKind::NameDecide
    } else {
        CheckKind::Safety
    }
}

fn budget(cfg: &RunConfig) -> Result<ExplorationBudget, CliError> {
    let depth = cfg.budgets.max_depth.unwrap_or(DEFAULT_DEPTH);
    let nodes = cfg.budgets.max_nodes.unwrap_or(DEFAULT_NODES);
    if depth == 0 || nodes == 0 {
        return Err(CliError::Config("budgets must be positive".into()));
    }
    Ok(ExplorationBudget::new(depth, nodes))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail { .. } => EXIT_VIOLATION,
        Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

/// Applies the configured schedule with its abort injections. Returns the
/// final configuration, the model error that stopped the run if any, and
/// whether a generated schedule ran out of steps before everyone returned.
fn execute(model: &Model, cfg: &RunConfig, seed: u64) -> (Configuration, Option<ModelError>, bool) {
    let mut c = model.initial();
    let n = model.n();
    let inject = |c: &mut Configuration, pos: usize| -> Result<(), ModelError> {
        for &(p, _) in cfg.abort_injections.iter().filter(|(_, k)| *k == pos) {
            model.step(c, ScheduleItem::Abort(ProcessId(p)))?;
        }
        Ok(())
    };
    let spec = cfg.schedule.clone().unwrap_or(ScheduleSpec::RoundRobin);
    let result: Result<bool, ModelError> = (|| match spec {
        ScheduleSpec::Inline(s) => {
            for (pos, &item) in s.items().iter().enumerate() {
                inject(&mut c, pos)?;
                model.step(&mut c, item)?;
            }
            let last = cfg.abort_injections.iter().map(|&(_, k)| k).filter(|&k| k >= s.len());
            let mut tail: Vec<usize> = last.collect();
            tail.sort_unstable();
            tail.dedup();
            for pos in tail {
                inject(&mut c, pos)?;
            }
            Ok(false)
        }
        generated => {
            let limit = cfg.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
            let mut rng = match generated {
                ScheduleSpec::Random(Some(k)) => ChaCha8Rng::seed_from_u64(k),
                _ => ChaCha8Rng::seed_from_u64(seed),
            };
            let mut cursor = 0usize;
            let mut pos = 0usize;
            loop {
                inject(&mut c, pos)?;
                let running: Vec<ProcessId> = c.processes().filter(|&p| !c.proc(p).is_returned()).collect();
                if running.is_empty() {
                    return Ok(false);
                }
                if pos as u64 >= limit {
                    return Ok(true);
                }
                let p = match generated {
                    ScheduleSpec::RoundRobin => {
                        let p = (0..n).map(|i| ProcessId(((cursor + i) % n) as u32)).find(|q| running.contains(q)).expect("someone is running");
                        cursor = p.index() + 1;
                        p
                    }
                    _ => *running.choose(&mut rng).expect("someone is running"),
                };
                model.step(&mut c, ScheduleItem::Step(p))?;
                pos += 1;
            }
        }
    })();
    match result {
        Ok(unfinished) => (c, None, unfinished),
        Err(e) => (c, Some(e), false),
    }
}

/// The check evaluated on one final configuration.
fn evaluate(kind: CheckKind, sub: &Subject, c: &Configuration, bound: Option<u64>) -> Result<Option<String>, CliError> {
    Ok(match kind {
        CheckKind::Safety => le_safety_violation(c),
        CheckKind::Abort => {
            let bound = bound.unwrap_or(DEFAULT_ABORT_BOUND);
            c.processes()
                .find(|&p| {
                    let st = c.proc(p);
                    st.aborted && !st.is_returned() && st.steps_since_abort >= bound
                })
                .map(|p| format!("{p} took {} steps after its abort without returning", c.proc(p).steps_since_abort))
        }
        CheckKind::Deadlock => {
            let bound = bound.unwrap_or(FairnessOptions::for_system(sub.n).max_steps_per_process);
            c.processes()
                .find(|&p| !c.proc(p).is_returned() && c.proc(p).steps >= bound)
                .map(|p| format!("{p} took {} steps without returning", c.proc(p).steps))
        }
        CheckKind::Linearizable => {
            let alg = cas_subject(sub)?;
            match check_linearizable_cas(&history(alg, c), 0) {
                Ok(Some(_)) => None,
                Ok(None) => Some("history has no linearization".into()),
                Err(e) => return Err(CliError::Config(e.to_string())),
            }
        }
        CheckKind::NameDecide => name_decide_violation(c),
    })
}

fn cas_subject(sub: &Subject) -> Result<&CasDemo, CliError> {
    sub.cas.as_ref().ok_or_else(|| CliError::Usage(format!("`{}` is not a CAS subject", sub.name)))
}

pub fn run(cfg: &RunConfig) -> Result<u8, CliError> {
    let sub = load_subject(cfg)?;
    let seed = cfg.effective_seed()?;
    let kind = cfg.check.unwrap_or_else(|| default_check(&sub.name));
    let model = Model::new(sub.alg.clone());
    let (c, fault, unfinished) = execute(&model, cfg, seed);
    let verdict = if let Some(e) = fault {
        Verdict::Fail { witness: c.lineage().clone(), reason: format!("model error: {e}") }
    } else if let Some(reason) = evaluate(kind, &sub, &c, cfg.bound)? {
        Verdict::Fail { witness: c.lineage().clone(), reason }
    } else if unfinished {
        let limit = cfg.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
        Verdict::Fail { witness: c.lineage().clone(), reason: format!("not every process returned within {limit} steps") }
    } else {
        Verdict::Pass
    };
    let report = json!({
        "subject": sub.name,
        "n": sub.n,
        "seed": seed,
        "check": kind,
        "verdict": verdict,
        "snapshot": snapshot_json(&c),
        "trace": trace_json(c.trace()),
    });
    emit(&report, cfg.output.as_deref())?;
    Ok(verdict_code(&verdict))
}

pub fn check(cfg: &RunConfig, runs: Option<usize>, witness: Option<&Path>) -> Result<u8, CliError> {
    let sub = load_subject(cfg)?;
    let seed = cfg.effective_seed()?;
    let kind = cfg.check.expect("checker is set by the subcommand");
    let model = Model::new(sub.alg.clone());
    let budget = budget(cfg)?;
    let mut bound = cfg.bound;
    let mut nodes = None;
    let mut complete = None;
    let outcome: Result<Verdict, ModelError> = match kind {
        CheckKind::Safety => check_le_safety_exhaustive(&model, budget),
        CheckKind::Abort => {
            bound = Some(bound.unwrap_or(DEFAULT_ABORT_BOUND));
            check_bounded_abort(&model, bound.unwrap(), budget)
        }
        CheckKind::Deadlock => {
            let mut opts = FairnessOptions::for_system(sub.n);
            opts.seed = seed;
            if let Some(b) = bound {
                opts.max_steps_per_process = b;
            }
            if let Some(r) = runs {
                opts.random_runs = r;
            }
            bound = Some(opts.max_steps_per_process);
            check_deadlock_freedom(&model, opts)
        }
        CheckKind::Linearizable => {
            let alg = cas_subject(&sub)?;
            explore_cas(&model, alg, budget).map(|x| {
                nodes = Some(x.nodes);
                complete = Some(x.complete);
                match x.verdict.unwrap_or(Verdict::Pass) {
                    Verdict::Pass if !x.complete => Verdict::Inconclusive { reason: format!("budget exhausted after {} states", x.nodes) },
                    v => v,
                }
            })
        }
        CheckKind::NameDecide => explore_name_decide(&model, budget).map(|x| {
            nodes = Some(x.nodes);
            complete = Some(x.complete);
            match x.violations.into_iter().next() {
                Some((witness, reason)) => Verdict::Fail { witness, reason },
                None if !x.complete => Verdict::Inconclusive { reason: format!("budget exhausted after {} states", x.nodes) },
                None => Verdict::Pass,
            }
        }),
    };
    let verdict = outcome.unwrap_or_else(|e| Verdict::Fail { witness: Schedule::new(), reason: format!("model error: {e}") });
    if let (Some(path), Some(w)) = (witness, verdict.witness()) {
        let replay = RunConfig {
            subject: Some(sub.name.clone()),
            n: Some(sub.n),
            schedule: Some(ScheduleSpec::Inline(w.clone())),
            check: Some(kind),
            bound,
            ..RunConfig::default()
        };
        emit(&replay, Some(path))?;
    }
    let report = json!({
        "checker": kind,
        "subject": sub.name,
        "n": sub.n,
        "seed": seed,
        "bound": bound,
        "verdict": verdict,
        "nodes_visited": nodes,
        "complete": complete,
    });
    emit(&report, cfg.output.as_deref())?;
    Ok(verdict_code(&verdict))
}

pub fn explore(cfg: &RunConfig, a: u32, b: u32, mode: AbortMode) -> Result<u8, CliError> {
    let sub = load_subject(cfg)?;
    let (a, b) = (ProcessId(a), ProcessId(b));
    if a == b || a.index() >= sub.n || b.index() >= sub.n {
        return Err(CliError::Usage(format!("need two distinct processes below {}", sub.n)));
    }
    let model = Model::new(sub.alg.clone());
    let prefix = match &cfg.schedule {
        None => Schedule::new(),
        Some(ScheduleSpec::Inline(s)) => s.clone(),
        Some(other) => return Err(CliError::Usage(format!("explore needs an explicit prefix, not `{other}`"))),
    };
    let start = match model.run(&prefix) {
        Ok(c) => c,
        Err(e) => return Err(CliError::Config(format!("prefix does not replay: {e}"))),
    };
    let class = match classify_bivalence(&model, &start, a, b, mode, budget(cfg)?) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("rmrlab: model error while exploring: {e}");
            return Ok(EXIT_VIOLATION);
        }
    };
    let vectors: Vec<_> = class.outcomes.vectors.keys().map(|v| [v.a, v.b]).collect();
    let witnesses: Vec<_> = class.outcomes.vectors.values().cloned().collect();
    let report = json!({
        "subject": sub.name,
        "n": sub.n,
        "a": a,
        "b": b,
        "mode": mode,
        "prefix": prefix,
        "classification": class.class,
        "vectors": vectors,
        "witnesses": witnesses,
        "solo": [class.solo_a, class.solo_b],
        "nodes_visited": class.outcomes.nodes,
        "complete": class.outcomes.complete,
    });
    emit(&report, cfg.output.as_deref())?;
    Ok(if class.outcomes.complete { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

pub fn adversary(cfg: &RunConfig, csv: Option<&Path>) -> Result<u8, CliError> {
    let sub = load_subject(cfg)?;
    let mut params = AdversaryParams { seed: cfg.effective_seed()?, ell_override: cfg.ell, rounds: cfg.rounds, ..AdversaryParams::default() };
    if let Some(c) = cfg.c {
        if c == 0 {
            return Err(CliError::Config("c must be positive".into()));
        }
        params.c = c;
    }
    if let Some(t) = cfg.turan_mode {
        params.turan_mode = t;
    }
    if cfg.budgets.max_depth.is_some() || cfg.budgets.max_nodes.is_some() {
        let d = params.both_lose_budget;
        params.both_lose_budget = ExplorationBudget::new(
            cfg.budgets.max_depth.unwrap_or(d.max_depth).max(1),
            cfg.budgets.max_nodes.unwrap_or(d.max_nodes).max(1),
        );
    }
    let report = match adversary::run(sub.alg.clone(), &params) {
        Ok(r) => r,
        Err(e) => {
            let detail = json!({ "error": e.source.to_string(), "round": e.round, "schedule": e.schedule });
            eprintln!("{}", serde_json::to_string_pretty(&detail).unwrap_or_default());
            return Err(CliError::Internal(e.to_string()));
        }
    };
    emit(&report, cfg.output.as_deref())?;
    if let Some(path) = csv {
        std::fs::write(path, report.histogram_csv()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(if report.invariants_hold() { EXIT_OK } else { EXIT_VIOLATION })
}
