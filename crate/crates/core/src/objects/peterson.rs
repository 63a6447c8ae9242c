//! Register-only abortable leader election: a binary tree of two-process
//! Peterson locks. A process climbs from its leaf; whoever gets through the
//! root announces itself and wins. Aborting withdraws every flag the process
//! raised and loses, and anyone who sees the announcement loses.
//!
//! Layouts:
//!
//! * `Central`: every tree register lives in process 0's segment. Node `k`
//!   (heap order, root 1) uses three consecutive registers `flag0, flag1,
//!   turn`, followed by `announce` and, if enabled, the doorway register.
//!   With progress markers on, index 0 of each segment records the node the
//!   owner is currently entering.
//! * `Split` (two processes only): `flag0 = R0[0]`, `flag1 = R1[0]`,
//!   `turn = R0[1]`, `announce = R0[2]`.

use crate::model::{Action, Algorithm, Locals, Observation, ProcessId, RegisterId, Ret};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Central,
    Split,
}

#[derive(Clone, Debug)]
pub struct PetersonTree {
    name: String,
    n: usize,
    height: u32,
    layout: Layout,
    progress: bool,
    doorway: bool,
}

const DOOR: u32 = 0;
const ENTER: u32 = 1;
const FLAG: u32 = 2;
const TURN: u32 = 3;
const LOOP_TOP: u32 = 4;
const READ_FLAG: u32 = 5;
const READ_TURN: u32 = 6;
const WON_NODE: u32 = 7;
const ANNOUNCE: u32 = 8;
const WITHDRAW: u32 = 9;
const DONE_WIN: u32 = 10;
const DONE_LOSE: u32 = 11;

// Locals: level of the current node above the leaf, and the withdraw cursor.
const LEVEL: usize = 0;
const CURSOR: usize = 1;

impl PetersonTree {
    /// The two-process lock with flags in the owners' segments.
    pub fn le2() -> Self {
        PetersonTree { name: "le2".into(), n: 2, height: 1, layout: Layout::Split, progress: false, doorway: false }
    }

    pub fn tournament(n: usize) -> Self {
        Self::central("tournament", n, true, false)
    }

    /// Tournament whose first step is a write to one shared doorway register.
    pub fn tournament_doorway(n: usize) -> Self {
        Self::central("tournament-doorway", n, true, true)
    }

    pub fn central(name: &str, n: usize, progress: bool, doorway: bool) -> Self {
        assert!(n >= 2);
        let height = (n as u64).next_power_of_two().trailing_zeros().max(1);
        PetersonTree { name: name.into(), n, height, layout: Layout::Central, progress, doorway }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn leaf(&self, p: ProcessId) -> u32 {
        (1 << self.height) + p.0
    }

    fn base(&self) -> u32 {
        u32::from(self.progress)
    }

    fn node_reg(&self, node: u32, j: u32) -> RegisterId {
        RegisterId::new(ProcessId(0), self.base() + 3 * (node - 1) + j)
    }

    fn flag(&self, node: u32, side: u32) -> RegisterId {
        match self.layout {
            Layout::Split => RegisterId::new(ProcessId(side), 0),
            Layout::Central => self.node_reg(node, side),
        }
    }

    fn turn(&self, node: u32) -> RegisterId {
        match self.layout {
            Layout::Split => RegisterId::new(ProcessId(0), 1),
            Layout::Central => self.node_reg(node, 2),
        }
    }

    pub fn announce(&self) -> RegisterId {
        match self.layout {
            Layout::Split => RegisterId::new(ProcessId(0), 2),
            Layout::Central => RegisterId::new(ProcessId(0), self.base() + 3 * ((1 << self.height) - 1)),
        }
    }

    pub fn door(&self) -> RegisterId {
        let a = self.announce();
        RegisterId::new(a.owner, a.index + 1)
    }

    fn progress_reg(&self, p: ProcessId) -> RegisterId {
        RegisterId::new(p, 0)
    }

    fn entry_pc(&self) -> u32 {
        if self.progress {
            ENTER
        } else {
            FLAG
        }
    }

    fn node_at(&self, p: ProcessId, level: i64) -> u32 {
        self.leaf(p) >> level
    }

    fn side_at(&self, p: ProcessId, level: i64) -> u32 {
        (self.leaf(p) >> (level - 1)) & 1
    }
}

impl Algorithm for PetersonTree {
    fn name(&self) -> &str {
        &self.name
    }

    fn processes(&self) -> usize {
        self.n
    }

    fn segment_len(&self, p: ProcessId) -> u32 {
        match self.layout {
            Layout::Split => {
                if p.0 == 0 {
                    3
                } else {
                    1
                }
            }
            Layout::Central => {
                if p.0 == 0 {
                    self.door().index + u32::from(self.doorway)
                } else {
                    u32::from(self.progress)
                }
            }
        }
    }

    fn init(&self, _p: ProcessId) -> Locals {
        let mut l = Locals::new(if self.doorway { DOOR } else { self.entry_pc() }, 2);
        l.vars[LEVEL] = 1;
        l
    }

    fn next(&self, p: ProcessId, l: &mut Locals, aborted: bool) -> Action {
        loop {
            let level = l.vars[LEVEL];
            let node = self.node_at(p, level);
            let side = self.side_at(p, level);
            match l.pc {
                DOOR => {
                    l.pc = self.entry_pc();
                    return Action::Write(self.door(), 1);
                }
                ENTER => {
                    l.pc = FLAG;
                    return Action::Write(self.progress_reg(p), i64::from(node));
                }
                FLAG => {
                    l.pc = TURN;
                    return Action::Write(self.flag(node, side), 1);
                }
                TURN => {
                    l.pc = LOOP_TOP;
                    return Action::Write(self.turn(node), i64::from(side) + 1);
                }
                LOOP_TOP => {
                    if aborted {
                        l.pc = WITHDRAW;
                        l.vars[CURSOR] = level;
                        continue;
                    }
                    return Action::Read(self.announce());
                }
                READ_FLAG => return Action::Read(self.flag(node, 1 - side)),
                READ_TURN => return Action::Read(self.turn(node)),
                WON_NODE => {
                    if node == 1 {
                        l.pc = ANNOUNCE;
                    } else {
                        l.vars[LEVEL] += 1;
                        l.pc = self.entry_pc();
                    }
                }
                ANNOUNCE => {
                    l.pc = DONE_WIN;
                    return Action::Write(self.announce(), 1);
                }
                WITHDRAW => {
                    let c = l.vars[CURSOR];
                    return Action::Write(self.flag(self.node_at(p, c), self.side_at(p, c)), 0);
                }
                DONE_WIN => return Action::Return(Ret::Win),
                DONE_LOSE => return Action::Return(Ret::Lose),
                _ => return Action::Fault("unknown program counter"),
            }
        }
    }

    fn observe(&self, p: ProcessId, l: &mut Locals, obs: Observation) {
        let side = self.side_at(p, l.vars[LEVEL]);
        match (l.pc, obs) {
            (LOOP_TOP, Observation::Read(v)) => l.pc = if v.data != 0 { DONE_LOSE } else { READ_FLAG },
            (READ_FLAG, Observation::Read(v)) => l.pc = if v.data == 0 { WON_NODE } else { READ_TURN },
            (READ_TURN, Observation::Read(v)) => {
                l.pc = if v.data != i64::from(side) + 1 { WON_NODE } else { LOOP_TOP };
            }
            (WITHDRAW, Observation::Wrote) => {
                if l.vars[CURSOR] == 1 {
                    l.pc = DONE_LOSE;
                } else {
                    l.vars[CURSOR] -= 1;
                }
            }
            _ => {}
        }
    }
}
