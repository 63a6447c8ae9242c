use std::fmt;

use super::ids::{ProcessId, RegisterId, RegisterValue, Ret};

/// Process-local state of a subject algorithm. Kept deliberately uniform so
/// the explorer can hash and compare it without knowing the algorithm.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Locals {
    pub pc: u32,
    pub vars: Vec<i64>,
}

impl Locals {
    pub fn new(pc: u32, vars: usize) -> Self {
        Locals { pc, vars: vec![0; vars] }
    }
}

/// The next shared-memory operation a process wants to perform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Read(RegisterId),
    Write(RegisterId, i64),
    /// Atomic test-and-set on a bit register: sets `data` to 1 if it was 0.
    TestAndSet(RegisterId),
    /// Halt with a result. The engine follows up with the terminating reads.
    Return(Ret),
    /// The subject reached a state it considers impossible.
    Fault(&'static str),
}

/// What the engine reports back after performing an [`Action`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observation {
    Read(RegisterValue),
    Wrote,
    Tas { acquired: bool },
}

/// A deterministic subject algorithm.
///
/// `next` may update `locals` to perform local computation before choosing an
/// action; `observe` then folds in the result of that action. Neither may
/// depend on anything other than their arguments. Register indices used by an
/// algorithm must be below `segment_len(owner)`; the engine reserves index
/// `segment_len(owner)` of every segment for its own invocation reads.
pub trait Algorithm: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn processes(&self) -> usize;
    fn segment_len(&self, p: ProcessId) -> u32;
    fn init(&self, p: ProcessId) -> Locals;
    fn next(&self, p: ProcessId, locals: &mut Locals, aborted: bool) -> Action;
    fn observe(&self, p: ProcessId, locals: &mut Locals, obs: Observation);
}
