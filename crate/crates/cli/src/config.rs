use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use rmrlab_core::adversary::TuranMode;
use rmrlab_core::model::Schedule;

use crate::error::CliError;

/// Where the schedule of a `run` comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleSpec {
    Inline(Schedule),
    RoundRobin,
    /// Random runnable process at every step; `None` uses the config seed.
    Random(Option<u64>),
}

impl std::str::FromStr for ScheduleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "round-robin" {
            return Ok(ScheduleSpec::RoundRobin);
        }
        if t == "random" {
            return Ok(ScheduleSpec::Random(None));
        }
        if let Some(arg) = t.strip_prefix("random(").and_then(|r| r.strip_suffix(')')) {
            let seed = arg.trim().parse().map_err(|_| format!("bad seed in `{t}`"))?;
            return Ok(ScheduleSpec::Random(Some(seed)));
        }
        t.parse::<Schedule>().map(ScheduleSpec::Inline).map_err(|e| e.to_string())
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Inline(s) => write!(f, "{s}"),
            ScheduleSpec::RoundRobin => f.write_str("round-robin"),
            ScheduleSpec::Random(None) => f.write_str("random"),
            ScheduleSpec::Random(Some(k)) => write!(f, "random({k})"),
        }
    }
}

impl Serialize for ScheduleSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ScheduleSpec::Inline(sched) => sched.serialize(s),
            other => s.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for ScheduleSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Items(Schedule),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Items(s) => Ok(ScheduleSpec::Inline(s)),
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Safety,
    Abort,
    Deadlock,
    Linearizable,
    NameDecide,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckKind::Safety => "safety",
            CheckKind::Abort => "abort",
            CheckKind::Deadlock => "deadlock",
            CheckKind::Linearizable => "linearizable",
            CheckKind::NameDecide => "name-decide",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub max_depth: Option<usize>,
    pub max_nodes: Option<usize>,
}

/// Everything a subcommand needs, as read from a config file and then
/// overridden by flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    /// `(process, position)`: deliver the abort before the item at that
    /// position of the schedule.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub abort_injections: Vec<(u32, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(skip_serializing_if = "is_default_budgets")]
    pub budgets: Budgets,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turan_mode: Option<TuranMode>,
}

fn is_default_budgets(b: &Budgets) -> bool {
    *b == Budgets::default()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::NoInput(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Seed after the `RMRLAB_SEED` override.
    pub fn effective_seed(&self) -> Result<u64, CliError> {
        match std::env::var("RMRLAB_SEED") {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("RMRLAB_SEED is not an integer: `{v}`"))),
            Err(_) => Ok(self.seed.unwrap_or(0)),
        }
    }
}
