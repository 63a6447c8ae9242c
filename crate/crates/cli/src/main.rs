//! `rmrlab`: run subjects, check them, explore valency and drive the
//! adversary from the command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rmrlab_core::adversary::TuranMode;
use rmrlab_core::explorer::AbortMode;

use crate::config::{CheckKind, RunConfig, ScheduleSpec};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "rmrlab", version, about = "Abortable leader election under a mixed RMR cost model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute one schedule and evaluate a check on the final configuration.
    Run(RunArgs),
    /// Run a checker over the schedules of a subject.
    Check(CheckArgs),
    /// Classify the valency of a configuration for a pair of processes.
    Explore(ExploreArgs),
    /// Build the adversarial execution round by round.
    Adversary(AdversaryArgs),
    /// List the registered subjects.
    Subjects,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    subject: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// `p0,p1,p0!`, `round-robin`, `random` or `random(<seed>)`.
    #[arg(long)]
    schedule: Option<ScheduleSpec>,
    /// Abort `P` before schedule position `K`, given as `P:K`; repeatable.
    #[arg(long = "abort", value_parser = parse_injection)]
    aborts: Vec<(u32, usize)>,
    #[arg(long, value_enum)]
    check: Option<CheckKind>,
    #[arg(long)]
    bound: Option<u64>,
    /// Length limit for generated schedules.
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(value_enum)]
    checker: CheckKind,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bound: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Random fair schedules tried by the deadlock checker.
    #[arg(long)]
    runs: Option<usize>,
    /// Write a replayable config for the counterexample here.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    AbortFree,
    WithAborts,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    a: u32,
    #[arg(long, default_value_t = 1)]
    b: u32,
    /// Schedule leading to the configuration to classify.
    #[arg(long)]
    prefix: Option<ScheduleSpec>,
    #[arg(long, value_enum, default_value = "abort-free")]
    mode: ModeArg,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TuranArg {
    Greedy,
    Exact,
}

#[derive(Args, Debug)]
struct AdversaryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    c: Option<u32>,
    #[arg(long, value_enum)]
    turan: Option<TuranArg>,
    /// Also write the per-round RMR histogram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_injection(s: &str) -> Result<(u32, usize), String> {
    let (p, k) = s.split_once(':').ok_or_else(|| format!("expected P:K, got `{s}`"))?;
    let p = p.trim().trim_start_matches('p').parse().map_err(|_| format!("bad process in `{s}`"))?;
    let k = k.trim().parse().map_err(|_| format!("bad position in `{s}`"))?;
    Ok((p, k))
}

fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if common.subject.is_some() {
        cfg.subject = common.subject.clone();
    }
    if common.n.is_some() {
        cfg.n = common.n;
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.out.is_some() {
        cfg.output = common.out.clone();
    }
    Ok(cfg)
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run(a) => {
            let mut cfg = base_config(&a.common)?;
            set(&mut cfg.schedule, a.schedule);
            if !a.aborts.is_empty() {
                cfg.abort_injections = a.aborts;
            }
            set(&mut cfg.check, a.check);
            set(&mut cfg.bound, a.bound);
            set(&mut cfg.max_steps, a.max_steps);
            commands::run(&cfg)
        }
        Command::Check(a) => {
            let mut cfg = base_config(&a.common)?;
            cfg.check = Some(a.checker);
            set(&mut cfg.bound, a.bound);
            set(&mut cfg.budgets.max_depth, a.depth);
            set(&mut cfg.budgets.max_nodes, a.max_nodes);
            commands::check(&cfg, a.runs, a.witness.as_deref())
        }
        Command::Explore(a) => {
            let mut cfg = base_config(&a.common)?;
            set(&mut cfg.schedule, a.prefix);
            set(&mut cfg.budgets.max_depth, a.depth);
            set(&mut cfg.budgets.max_nodes, a.max_nodes);
            let mode = match a.mode {
                ModeArg::AbortFree => AbortMode::AbortFree,
                ModeArg::WithAborts => AbortMode::WithAborts,
            };
            commands::explore(&cfg, a.a, a.b, mode)
        }
        Command::Adversary(a) => {
            let mut cfg = base_config(&a.common)?;
            set(&mut cfg.rounds, a.rounds);
            set(&mut cfg.ell, a.ell);
            set(&mut cfg.c, a.c);
            let turan = a.turan.map(|t| match t {
                TuranArg::Greedy => TuranMode::Greedy,
                TuranArg::Exact => TuranMode::Exact,
            });
            set(&mut cfg.turan_mode, turan);
            commands::adversary(&cfg, a.csv.as_deref())
        }
        Command::Subjects => {
            for s in rmrlab_core::objects::SUBJECTS {
                println!("{s}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::from(EXIT_OK) };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => e.exit(),
    }
}
