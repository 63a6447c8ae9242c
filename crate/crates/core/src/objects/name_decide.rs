//! Name consensus from one abortable test-and-set bit and a `leader`
//! register. The TAS winner publishes its id; everyone else waits for it,
//! giving up with `⊥` if aborted while `leader` is still empty.
//!
//! Registers: `tas = R0[0]`, `leader = R0[1]` holding `id + 1` (0 is empty).

use crate::model::{Action, Algorithm, Locals, Observation, ProcessId, RegisterId, Ret};

pub const TAS_REG: RegisterId = RegisterId::new(ProcessId(0), 0);
pub const LEADER_REG: RegisterId = RegisterId::new(ProcessId(0), 1);

#[derive(Clone, Debug)]
pub struct NameDecide {
    n: usize,
}

const TAS: u32 = 0;
const WRITE_LEADER: u32 = 1;
const WAIT: u32 = 2;
const WAIT_CHECK: u32 = 3;
const FINAL_READ: u32 = 4;
const RETURN: u32 = 5;

impl NameDecide {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        NameDecide { n }
    }
}

impl Algorithm for NameDecide {
    fn name(&self) -> &str {
        "name-decide"
    }

    fn processes(&self) -> usize {
        self.n
    }

    fn segment_len(&self, p: ProcessId) -> u32 {
        if p.0 == 0 {
            2
        } else {
            0
        }
    }

    fn init(&self, _p: ProcessId) -> Locals {
        Locals::new(TAS, 1)
    }

    fn next(&self, p: ProcessId, l: &mut Locals, aborted: bool) -> Action {
        loop {
            match l.pc {
                TAS => {
                    if aborted {
                        // The abortable TAS fails outright and has no effect.
                        l.pc = WAIT;
                        continue;
                    }
                    return Action::TestAndSet(TAS_REG);
                }
                WRITE_LEADER => {
                    l.pc = FINAL_READ;
                    return Action::Write(LEADER_REG, i64::from(p.0) + 1);
                }
                WAIT | FINAL_READ => return Action::Read(LEADER_REG),
                WAIT_CHECK => {
                    if aborted {
                        return Action::Return(Ret::Bottom);
                    }
                    l.pc = WAIT;
                }
                RETURN => return Action::Return(Ret::Value(l.vars[0])),
                _ => return Action::Fault("unknown program counter"),
            }
        }
    }

    fn observe(&self, _p: ProcessId, l: &mut Locals, obs: Observation) {
        match (l.pc, obs) {
            (TAS, Observation::Tas { acquired }) => l.pc = if acquired { WRITE_LEADER } else { WAIT },
            (WAIT, Observation::Read(v)) => l.pc = if v.data != 0 { FINAL_READ } else { WAIT_CHECK },
            (FINAL_READ, Observation::Read(v)) => {
                l.vars[0] = v.data - 1;
                l.pc = RETURN;
            }
            _ => {}
        }
    }
}
