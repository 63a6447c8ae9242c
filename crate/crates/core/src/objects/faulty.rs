//! Deliberately broken leader-election subjects used to exercise checkers.

use crate::model::{Action, Algorithm, Locals, Observation, ProcessId, RegisterId, Ret};

const ANNOUNCE: RegisterId = RegisterId::new(ProcessId(0), 0);

fn flag(p: u32) -> RegisterId {
    RegisterId::new(ProcessId(p), 0)
}

/// Every process wins.
#[derive(Clone, Debug)]
pub struct DoubleWinner {
    pub n: usize,
}

impl Algorithm for DoubleWinner {
    fn name(&self) -> &str {
        "double-winner"
    }

    fn processes(&self) -> usize {
        self.n
    }

    fn segment_len(&self, _p: ProcessId) -> u32 {
        0
    }

    fn init(&self, _p: ProcessId) -> Locals {
        Locals::new(0, 0)
    }

    fn next(&self, _p: ProcessId, _l: &mut Locals, _aborted: bool) -> Action {
        Action::Return(Ret::Win)
    }

    fn observe(&self, _p: ProcessId, _l: &mut Locals, _obs: Observation) {}
}

/// Process 0 announces and wins; everyone else spins on the announcement
/// and never looks at its abort flag.
#[derive(Clone, Debug)]
pub struct AbortIgnoringSpinner {
    pub n: usize,
}

impl Algorithm for AbortIgnoringSpinner {
    fn name(&self) -> &str {
        "abort-ignoring-spinner"
    }

    fn processes(&self) -> usize {
        self.n
    }

    fn segment_len(&self, p: ProcessId) -> u32 {
        u32::from(p.0 == 0)
    }

    fn init(&self, _p: ProcessId) -> Locals {
        Locals::new(0, 0)
    }

    fn next(&self, p: ProcessId, l: &mut Locals, _aborted: bool) -> Action {
        match (p.0, l.pc) {
            (0, 0) => {
                l.pc = 1;
                Action::Write(ANNOUNCE, 1)
            }
            (0, _) => Action::Return(Ret::Win),
            (_, 0) => Action::Read(ANNOUNCE),
            _ => Action::Return(Ret::Lose),
        }
    }

    fn observe(&self, p: ProcessId, l: &mut Locals, obs: Observation) {
        if let (true, Observation::Read(v)) = (p.0 != 0, obs) {
            if v.data != 0 {
                l.pc = 1;
            }
        }
    }
}

/// Two processes that each raise their flag and then wait for the other's
/// flag to drop, which never happens once both are up.
#[derive(Clone, Debug)]
pub struct DeadlockingPair;

impl Algorithm for DeadlockingPair {
    fn name(&self) -> &str {
        "deadlocking-pair"
    }

    fn processes(&self) -> usize {
        2
    }

    fn segment_len(&self, _p: ProcessId) -> u32 {
        1
    }

    fn init(&self, _p: ProcessId) -> Locals {
        Locals::new(0, 0)
    }

    fn next(&self, p: ProcessId, l: &mut Locals, aborted: bool) -> Action {
        match l.pc {
            0 => {
                l.pc = 1;
                Action::Write(flag(p.0), 1)
            }
            1 if aborted => Action::Return(Ret::Lose),
            1 => Action::Read(flag(1 - p.0)),
            _ => Action::Return(Ret::Win),
        }
    }

    fn observe(&self, _p: ProcessId, l: &mut Locals, obs: Observation) {
        if let (1, Observation::Read(v)) = (l.pc, obs) {
            if v.data == 0 {
                l.pc = 2;
            }
        }
    }
}

/// Process 1 loses only after process 0 has won. Correct under fair
/// schedules even though process 1 waits forever if process 0 never runs.
#[derive(Clone, Debug)]
pub struct WaitsForPeer;

impl Algorithm for WaitsForPeer {
    fn name(&self) -> &str {
        "waits-for-peer"
    }

    fn processes(&self) -> usize {
        2
    }

    fn segment_len(&self, p: ProcessId) -> u32 {
        u32::from(p.0 == 0)
    }

    fn init(&self, _p: ProcessId) -> Locals {
        Locals::new(0, 0)
    }

    fn next(&self, p: ProcessId, l: &mut Locals, aborted: bool) -> Action {
        match (p.0, l.pc) {
            (0, 0) => {
                l.pc = 1;
                Action::Write(ANNOUNCE, 1)
            }
            (0, _) => Action::Return(Ret::Win),
            (_, 0) if aborted => Action::Return(Ret::Lose),
            (_, 0) => Action::Read(ANNOUNCE),
            _ => Action::Return(Ret::Lose),
        }
    }

    fn observe(&self, p: ProcessId, l: &mut Locals, obs: Observation) {
        if let (1, Observation::Read(v)) = (p.0, obs) {
            if v.data != 0 {
                l.pc = 1;
            }
        }
    }
}
