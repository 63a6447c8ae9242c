use std::fmt;

use serde::{Deserialize, Serialize};

/// A process identifier in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// All ids of an `n`-process system in ascending order.
    pub fn all(n: usize) -> impl Iterator<Item = ProcessId> + Clone {
        (0..n as u32).map(ProcessId)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl From<u32> for ProcessId {
    fn from(v: u32) -> Self {
        ProcessId(v)
    }
}

/// A register in the memory segment of `owner`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegisterId {
    pub owner: ProcessId,
    pub index: u32,
}

impl RegisterId {
    pub const fn new(owner: ProcessId, index: u32) -> Self {
        RegisterId { owner, index }
    }

    pub fn is_local_to(self, p: ProcessId) -> bool {
        self.owner == p
    }
}

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}[{}]", self.owner.0, self.index)
    }
}

/// The state a writer was in when it wrote. Step counters are strictly
/// increasing per process, so no token is ever written twice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateToken {
    pub process: ProcessId,
    pub step_count: u64,
}

/// Contents of a register: the writer, the writer's state token (`None` for
/// the initial value), and the algorithm-level datum the writer published.
///
/// Algorithms may branch on `writer` and `data`; the token only exists to make
/// every written value distinct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegisterValue {
    pub writer: ProcessId,
    pub token: Option<StateToken>,
    pub data: i64,
}

impl RegisterValue {
    /// Initial value `(owner, ⊥)` of a register in `R_owner`.
    pub const fn initial(owner: ProcessId) -> Self {
        RegisterValue { writer: owner, token: None, data: 0 }
    }

    pub fn is_initial(&self) -> bool {
        self.token.is_none()
    }

    /// The process visible on a register holding this value, if any.
    pub fn visible(&self) -> Option<ProcessId> {
        self.token.map(|t| t.process)
    }
}

/// What a process returns when it halts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ret {
    Win,
    Lose,
    Value(i64),
    Bottom,
}

impl fmt::Display for Ret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ret::Win => f.write_str("win"),
            Ret::Lose => f.write_str("lose"),
            Ret::Value(v) => write!(f, "{v}"),
            Ret::Bottom => f.write_str("⊥"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Returned(Ret),
}

impl Status {
    pub fn is_returned(self) -> bool {
        matches!(self, Status::Returned(_))
    }

    pub fn ret(self) -> Option<Ret> {
        match self {
            Status::Returned(r) => Some(r),
            Status::Running => None,
        }
    }
}
