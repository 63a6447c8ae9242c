//! Abortable compare-and-swap from name consensus and registers.
//!
//! All registers live in process 0's segment: `D = R0[0]` holds the index of
//! the current page, and page `k` occupies `R0[1 + 4k ..]` as
//! `value, flag, leader, tas`. Page 0 is the initial page. Each process owns
//! a private slice of the pool, so allocation needs no synchronization.

use serde::{Deserialize, Serialize};

use crate::model::{Action, Algorithm, Configuration, Locals, Observation, ProcessId, RegisterId, Ret};

pub const PAGES_PER_PROCESS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CasOp {
    Cas { cmp: i64, new: i64 },
    Read,
}

#[derive(Clone, Debug)]
pub struct CasDemo {
    ops: Vec<CasOp>,
}

const READ_D: u32 = 0;
const READ_VAL: u32 = 1;
const AFTER_VAL: u32 = 2;
const ND_TAS: u32 = 3;
const ND_WRITE: u32 = 4;
const ND_WAIT: u32 = 5;
const ND_WAIT_CHECK: u32 = 6;
const ND_FINAL: u32 = 7;
const AFTER_ND: u32 = 8;
const W_NEW_VALUE: u32 = 9;
const W_D: u32 = 10;
const W_OLD_VALUE: u32 = 11;
const W_FLAG: u32 = 12;
const SPIN: u32 = 13;
const SPIN_CHECK: u32 = 14;
const LOSER_READ: u32 = 15;
const RETURN_OLD: u32 = 16;

const D_VAR: usize = 0;
const OLD: usize = 1;
const WINNER: usize = 2;
const ALLOCATED: usize = 3;
const NEW_PAGE: usize = 4;

pub const D_REG: RegisterId = RegisterId::new(ProcessId(0), 0);

fn page_reg(page: i64, field: u32) -> RegisterId {
    RegisterId::new(ProcessId(0), 1 + 4 * page as u32 + field)
}

fn value_reg(page: i64) -> RegisterId {
    page_reg(page, 0)
}

fn flag_reg(page: i64) -> RegisterId {
    page_reg(page, 1)
}

fn leader_reg(page: i64) -> RegisterId {
    page_reg(page, 2)
}

fn tas_reg(page: i64) -> RegisterId {
    page_reg(page, 3)
}

impl CasDemo {
    pub fn new(ops: Vec<CasOp>) -> Self {
        assert!(ops.len() >= 2);
        CasDemo { ops }
    }

    /// Even processes try `0 → p+1`, odd ones `1 → p+1`.
    pub fn default_mix(n: usize) -> Self {
        let ops = (0..n as i64).map(|p| CasOp::Cas { cmp: p % 2, new: p + 1 }).collect();
        Self::new(ops)
    }

    /// Every process but the last tries `0 → p+1`; the last one reads.
    pub fn contended(n: usize) -> Self {
        let mut ops: Vec<CasOp> = (0..n as i64).map(|p| CasOp::Cas { cmp: 0, new: p + 1 }).collect();
        ops[n - 1] = CasOp::Read;
        Self::new(ops)
    }

    pub fn ops(&self) -> &[CasOp] {
        &self.ops
    }

    pub fn op(&self, p: ProcessId) -> CasOp {
        self.ops[p.index()]
    }
}

impl Algorithm for CasDemo {
    fn name(&self) -> &str {
        "cas-demo"
    }

    fn processes(&self) -> usize {
        self.ops.len()
    }

    fn segment_len(&self, p: ProcessId) -> u32 {
        if p.0 == 0 {
            let pages = 1 + PAGES_PER_PROCESS * self.ops.len() as u32;
            1 + 4 * pages
        } else {
            0
        }
    }

    fn init(&self, _p: ProcessId) -> Locals {
        Locals::new(READ_D, 5)
    }

    fn next(&self, p: ProcessId, l: &mut Locals, aborted: bool) -> Action {
        let d = l.vars[D_VAR];
        loop {
            match l.pc {
                READ_D => return Action::Read(D_REG),
                READ_VAL => return Action::Read(value_reg(d)),
                AFTER_VAL => {
                    l.pc = match self.op(p) {
                        CasOp::Cas { cmp, new } if l.vars[OLD] == cmp && cmp != new => ND_TAS,
                        _ => RETURN_OLD,
                    };
                }
                ND_TAS => {
                    if aborted {
                        l.pc = ND_WAIT;
                        continue;
                    }
                    return Action::TestAndSet(tas_reg(d));
                }
                ND_WRITE => {
                    l.pc = ND_FINAL;
                    return Action::Write(leader_reg(d), i64::from(p.0) + 1);
                }
                ND_WAIT | ND_FINAL => return Action::Read(leader_reg(d)),
                ND_WAIT_CHECK => {
                    if aborted {
                        return Action::Return(Ret::Bottom);
                    }
                    l.pc = ND_WAIT;
                }
                AFTER_ND => {
                    if l.vars[WINNER] != i64::from(p.0) {
                        l.pc = SPIN;
                        continue;
                    }
                    if l.vars[ALLOCATED] >= i64::from(PAGES_PER_PROCESS) {
                        return Action::Fault("page pool exhausted");
                    }
                    l.vars[NEW_PAGE] = 1 + i64::from(PAGES_PER_PROCESS) * i64::from(p.0) + l.vars[ALLOCATED];
                    l.vars[ALLOCATED] += 1;
                    l.pc = W_NEW_VALUE;
                }
                W_NEW_VALUE => {
                    l.pc = W_D;
                    return Action::Write(value_reg(l.vars[NEW_PAGE]), self.new_value(p));
                }
                W_D => {
                    l.pc = W_OLD_VALUE;
                    return Action::Write(D_REG, l.vars[NEW_PAGE]);
                }
                W_OLD_VALUE => {
                    l.pc = W_FLAG;
                    return Action::Write(value_reg(d), self.new_value(p));
                }
                W_FLAG => {
                    l.pc = RETURN_OLD;
                    return Action::Write(flag_reg(d), 1);
                }
                SPIN => return Action::Read(flag_reg(d)),
                SPIN_CHECK => {
                    if aborted {
                        return Action::Return(Ret::Bottom);
                    }
                    l.pc = SPIN;
                }
                LOSER_READ => return Action::Read(value_reg(d)),
                RETURN_OLD => return Action::Return(Ret::Value(l.vars[OLD])),
                _ => return Action::Fault("unknown program counter"),
            }
        }
    }

    fn observe(&self, _p: ProcessId, l: &mut Locals, obs: Observation) {
        match (l.pc, obs) {
            (READ_D, Observation::Read(v)) => {
                l.vars[D_VAR] = v.data;
                l.pc = READ_VAL;
            }
            (READ_VAL, Observation::Read(v)) => {
                l.vars[OLD] = v.data;
                l.pc = AFTER_VAL;
            }
            (ND_TAS, Observation::Tas { acquired }) => l.pc = if acquired { ND_WRITE } else { ND_WAIT },
            (ND_WAIT, Observation::Read(v)) => l.pc = if v.data != 0 { ND_FINAL } else { ND_WAIT_CHECK },
            (ND_FINAL, Observation::Read(v)) => {
                l.vars[WINNER] = v.data - 1;
                l.pc = AFTER_ND;
            }
            (SPIN, Observation::Read(v)) => l.pc = if v.data != 0 { LOSER_READ } else { SPIN_CHECK },
            (LOSER_READ, Observation::Read(v)) => {
                l.vars[OLD] = v.data;
                l.pc = RETURN_OLD;
            }
            _ => {}
        }
    }
}

impl CasDemo {
    fn new_value(&self, p: ProcessId) -> i64 {
        match self.op(p) {
            CasOp::Cas { new, .. } => new,
            CasOp::Read => 0,
        }
    }
}

/// One operation of a CAS history. Times are trace positions; `resp` is the
/// step in which the operation decided its result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CasRecord {
    pub process: ProcessId,
    pub op: CasOp,
    pub inv: u64,
    pub resp: Option<u64>,
    pub result: Option<Ret>,
}

impl CasRecord {
    pub fn is_complete(&self) -> bool {
        self.resp.is_some()
    }
}

/// The operations invoked in `c`, in process order.
pub fn history(alg: &CasDemo, c: &Configuration) -> Vec<CasRecord> {
    c.processes()
        .filter_map(|p| {
            let st = c.proc(p);
            let inv = st.first_step?;
            Some(CasRecord { process: p, op: alg.op(p), inv, resp: st.decided_at, result: st.decision() })
        })
        .collect()
}

/// The value `D` currently points at, read directly from memory.
pub fn current_value(c: &Configuration) -> i64 {
    c.value(value_reg(c.value(D_REG).data)).data
}
