use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ids::ProcessId;

/// One schedule symbol: a step by a process, or delivery of its abort signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScheduleItem {
    Step(ProcessId),
    Abort(ProcessId),
}

impl ScheduleItem {
    pub fn process(self) -> ProcessId {
        match self {
            ScheduleItem::Step(p) | ScheduleItem::Abort(p) => p,
        }
    }

    pub fn is_abort(self) -> bool {
        matches!(self, ScheduleItem::Abort(_))
    }
}

impl fmt::Display for ScheduleItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleItem::Step(p) => write!(f, "p{}", p.0),
            ScheduleItem::Abort(p) => write!(f, "p{}!", p.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed schedule item `{0}` (expected `p<id>` or `p<id>!`)")]
pub struct ParseItemError(pub String);

impl FromStr for ScheduleItem {
    type Err = ParseItemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (body, abort) = match t.strip_suffix('!') {
            Some(b) => (b, true),
            None => (t, false),
        };
        let digits = body.strip_prefix('p').unwrap_or(body);
        let id: u32 = digits.parse().map_err(|_| ParseItemError(s.to_string()))?;
        let p = ProcessId(id);
        Ok(if abort { ScheduleItem::Abort(p) } else { ScheduleItem::Step(p) })
    }
}

impl Serialize for ScheduleItem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScheduleItem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite sequence over `P ∪ P^⊤`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(pub Vec<ScheduleItem>);

impl Schedule {
    pub fn new() -> Self {
        Schedule(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[ScheduleItem] {
        &self.0
    }

    pub fn push(&mut self, item: ScheduleItem) {
        self.0.push(item);
    }

    pub fn step(&mut self, p: ProcessId) -> &mut Self {
        self.0.push(ScheduleItem::Step(p));
        self
    }

    pub fn abort(&mut self, p: ProcessId) -> &mut Self {
        self.0.push(ScheduleItem::Abort(p));
        self
    }

    /// `p^k`.
    pub fn solo(p: ProcessId, k: usize) -> Self {
        Schedule(vec![ScheduleItem::Step(p); k])
    }

    pub fn concat(&self, other: &Schedule) -> Schedule {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Schedule(v)
    }

    /// `σ | P^Δ`: keeps the steps and abort symbols of processes in `keep`.
    pub fn project(&self, keep: &BTreeSet<ProcessId>) -> Schedule {
        Schedule(self.0.iter().copied().filter(|i| keep.contains(&i.process())).collect())
    }

    /// `Proc(σ)`: processes with at least one step symbol (abort symbols do
    /// not count).
    pub fn procs(&self) -> BTreeSet<ProcessId> {
        self.0
            .iter()
            .filter_map(|i| match i {
                ScheduleItem::Step(p) => Some(*p),
                ScheduleItem::Abort(_) => None,
            })
            .collect()
    }

    pub fn aborted(&self) -> BTreeSet<ProcessId> {
        self.0
            .iter()
            .filter_map(|i| match i {
                ScheduleItem::Abort(p) => Some(*p),
                ScheduleItem::Step(_) => None,
            })
            .collect()
    }

    pub fn contains_abort_of(&self, p: ProcessId) -> bool {
        self.0.contains(&ScheduleItem::Abort(p))
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("⟩")
    }
}

impl FromIterator<ScheduleItem> for Schedule {
    fn from_iter<I: IntoIterator<Item = ScheduleItem>>(iter: I) -> Self {
        Schedule(iter.into_iter().collect())
    }
}

impl FromStr for Schedule {
    type Err = ParseItemError;

    /// Parses a comma- or whitespace-separated list such as `p0 p1! p1`,
    /// optionally inside `⟨ ⟩`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix('⟨').and_then(|t| t.strip_suffix('⟩')).unwrap_or(s);
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}
