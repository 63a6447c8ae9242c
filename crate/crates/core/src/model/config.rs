use std::collections::BTreeMap;
use std::sync::Arc;

use super::algorithm::{Action, Algorithm, Locals, Observation};
use super::ids::{ProcessId, RegisterId, RegisterValue, Ret, StateToken, Status};
use super::schedule::{Schedule, ScheduleItem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{process} exceeded the step ceiling of {ceiling}")]
    AlgorithmTooDeep { process: ProcessId, ceiling: u64 },
    #[error("schedule names {0}, which is not a process of this system")]
    UnknownProcess(ProcessId),
    #[error("{process} faulted: {message}")]
    SubjectFault { process: ProcessId, message: String },
    #[error("{process} accessed {register}, which is outside every segment")]
    InvalidRegister { process: ProcessId, register: RegisterId },
}

/// Where a process is in its normalized program: optional own-segment scan,
/// the invocation read, the algorithm proper, the terminating reads, halted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Scan(u32),
    Invoke,
    Run,
    Terminate { ret: Ret, next: u32 },
    Halted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcState {
    pub phase: Phase,
    pub locals: Locals,
    pub aborted: bool,
    pub status: Status,
    /// Shared-memory steps taken so far.
    pub steps: u64,
    /// Value this process last read or wrote, per register.
    pub last_seen: BTreeMap<RegisterId, RegisterValue>,
    /// Trace position of the terminating read of each own register.
    pub term_reads: BTreeMap<RegisterId, u64>,
    pub first_step: Option<u64>,
    /// Trace position of the step in which the algorithm decided to return.
    pub decided_at: Option<u64>,
    /// Own steps taken after the abort signal arrived.
    pub steps_since_abort: u64,
}

impl ProcState {
    /// The return value, once the algorithm has decided (possibly before the
    /// terminating reads are finished).
    pub fn decision(&self) -> Option<Ret> {
        match self.phase {
            Phase::Terminate { ret, .. } => Some(ret),
            _ => self.status.ret(),
        }
    }

    pub fn is_returned(&self) -> bool {
        self.status.is_returned()
    }

    pub fn has_stepped(&self) -> bool {
        self.steps > 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepAction {
    Read { register: RegisterId, value: RegisterValue },
    Write { register: RegisterId, value: RegisterValue },
    AbortSignal,
}

impl StepAction {
    pub fn register(&self) -> Option<RegisterId> {
        match *self {
            StepAction::Read { register, .. } | StepAction::Write { register, .. } => Some(register),
            StepAction::AbortSignal => None,
        }
    }

    pub fn value(&self) -> Option<RegisterValue> {
        match *self {
            StepAction::Read { value, .. } | StepAction::Write { value, .. } => Some(value),
            StepAction::AbortSignal => None,
        }
    }

    pub fn is_write(&self) -> bool {
        matches!(self, StepAction::Write { .. })
    }

    pub fn is_read(&self) -> bool {
        matches!(self, StepAction::Read { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExecutionStep {
    pub seq: u64,
    pub actor: ProcessId,
    pub action: StepAction,
    pub is_rmr: bool,
}

/// An execution step with its position stripped, for comparing executions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub actor: ProcessId,
    pub action: StepAction,
    pub is_rmr: bool,
}

impl ExecutionStep {
    pub fn event(&self) -> Event {
        Event { actor: self.actor, action: self.action, is_rmr: self.is_rmr }
    }

    pub fn is_shared_memory(&self) -> bool {
        !matches!(self.action, StepAction::AbortSignal)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub steps: Vec<ExecutionStep>,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ExecutionStep> {
        self.steps.iter()
    }

    /// `E|P` with positions dropped.
    pub fn restrict(&self, keep: &std::collections::BTreeSet<ProcessId>) -> Vec<Event> {
        restrict(&self.steps, keep)
    }

    pub fn total_rmr(&self) -> u64 {
        self.steps.iter().filter(|s| s.is_rmr).count() as u64
    }
}

pub fn restrict(steps: &[ExecutionStep], keep: &std::collections::BTreeSet<ProcessId>) -> Vec<Event> {
    steps.iter().filter(|s| keep.contains(&s.actor)).map(ExecutionStep::event).collect()
}

/// A full system snapshot together with the execution that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub(crate) procs: Vec<ProcState>,
    pub(crate) registers: BTreeMap<RegisterId, RegisterValue>,
    pub(crate) trace: Vec<ExecutionStep>,
    pub(crate) lineage: Schedule,
    /// Number of registers in each segment, including the reserved one.
    pub(crate) segments: Arc<[u32]>,
}

impl Configuration {
    pub fn n(&self) -> usize {
        self.procs.len()
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> + Clone {
        ProcessId::all(self.procs.len())
    }

    pub fn proc(&self, p: ProcessId) -> &ProcState {
        &self.procs[p.index()]
    }

    pub fn procs(&self) -> &[ProcState] {
        &self.procs
    }

    /// `val_C(r)`.
    pub fn value(&self, r: RegisterId) -> RegisterValue {
        self.registers.get(&r).copied().unwrap_or(RegisterValue::initial(r.owner))
    }

    /// Registers that have been written at least once, in ascending order.
    pub fn written_registers(&self) -> &BTreeMap<RegisterId, RegisterValue> {
        &self.registers
    }

    /// `E(C)`.
    pub fn trace(&self) -> &[ExecutionStep] {
        &self.trace
    }

    /// `Sched(C)`: the non-ignored schedule items applied since `Γ`.
    pub fn lineage(&self) -> &Schedule {
        &self.lineage
    }

    pub fn segment_size(&self, p: ProcessId) -> u32 {
        self.segments[p.index()]
    }

    /// `ℛ_p`.
    pub fn segment(&self, p: ProcessId) -> impl Iterator<Item = RegisterId> {
        (0..self.segments[p.index()]).map(move |i| RegisterId::new(p, i))
    }

    pub fn is_valid_register(&self, r: RegisterId) -> bool {
        r.owner.index() < self.procs.len() && r.index < self.segments[r.owner.index()]
    }

    /// `E(C)|p`.
    pub fn history(&self, p: ProcessId) -> Vec<Event> {
        self.trace.iter().filter(|s| s.actor == p).map(ExecutionStep::event).collect()
    }

    pub fn status(&self, p: ProcessId) -> Status {
        self.procs[p.index()].status
    }

    pub fn all_returned(&self) -> bool {
        self.procs.iter().all(ProcState::is_returned)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelOptions {
    /// Let every process read its own segment before the invocation read.
    pub scan_prefix: bool,
    pub step_ceiling: u64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { scan_prefix: false, step_ceiling: 1_000_000 }
    }
}

/// A subject algorithm bound to the execution semantics.
#[derive(Clone, Debug)]
pub struct Model {
    alg: Arc<dyn Algorithm>,
    opts: ModelOptions,
    segments: Arc<[u32]>,
}

impl Model {
    pub fn new(alg: Arc<dyn Algorithm>) -> Self {
        Self::with_options(alg, ModelOptions::default())
    }

    pub fn with_options(alg: Arc<dyn Algorithm>, opts: ModelOptions) -> Self {
        let n = alg.processes();
        assert!(n >= 2, "a system needs at least two processes");
        let segments: Arc<[u32]> = ProcessId::all(n).map(|p| alg.segment_len(p) + 1).collect();
        Model { alg, opts, segments }
    }

    pub fn algorithm(&self) -> &Arc<dyn Algorithm> {
        &self.alg
    }

    pub fn options(&self) -> ModelOptions {
        self.opts
    }

    pub fn n(&self) -> usize {
        self.segments.len()
    }

    /// The reserved register of `p`'s segment; never touched by algorithms.
    pub fn home_register(&self, p: ProcessId) -> RegisterId {
        RegisterId::new(p, self.segments[p.index()] - 1)
    }

    /// Target of `p`'s invocation read. Process 0 reads process 1's reserved
    /// register and every other process reads process 0's.
    pub fn invocation_register(&self, p: ProcessId) -> RegisterId {
        if p.0 == 0 {
            self.home_register(ProcessId(1))
        } else {
            self.home_register(ProcessId(0))
        }
    }

    /// `Γ`.
    pub fn initial(&self) -> Configuration {
        let procs = ProcessId::all(self.n())
            .map(|p| ProcState {
                phase: if self.opts.scan_prefix { Phase::Scan(0) } else { Phase::Invoke },
                locals: self.alg.init(p),
                aborted: false,
                status: Status::Running,
                steps: 0,
                last_seen: BTreeMap::new(),
                term_reads: BTreeMap::new(),
                first_step: None,
                decided_at: None,
                steps_since_abort: 0,
            })
            .collect();
        Configuration {
            procs,
            registers: BTreeMap::new(),
            trace: Vec::new(),
            lineage: Schedule::new(),
            segments: self.segments.clone(),
        }
    }

    /// `Conf(C, σ)` and `Exec(C, σ)`.
    pub fn apply(&self, c: &Configuration, sigma: &Schedule) -> Result<(Configuration, ExecutionTrace), ModelError> {
        let mut next = c.clone();
        let start = next.trace.len();
        for &item in sigma.items() {
            self.step(&mut next, item)?;
        }
        let trace = ExecutionTrace { steps: next.trace[start..].to_vec() };
        Ok((next, trace))
    }

    /// `Conf(Γ, σ)`.
    pub fn run(&self, sigma: &Schedule) -> Result<Configuration, ModelError> {
        let mut c = self.initial();
        for &item in sigma.items() {
            self.step(&mut c, item)?;
        }
        Ok(c)
    }

    /// Applies one schedule item in place. Returns `None` when the item is
    /// ignored (a step of a halted process, or a repeated or late abort).
    pub fn step(&self, c: &mut Configuration, item: ScheduleItem) -> Result<Option<ExecutionStep>, ModelError> {
        let p = item.process();
        if p.index() >= c.procs.len() {
            return Err(ModelError::UnknownProcess(p));
        }
        let seq = c.trace.len() as u64;
        let step = match item {
            ScheduleItem::Abort(_) => {
                let st = &mut c.procs[p.index()];
                if st.is_returned() || st.aborted {
                    return Ok(None);
                }
                st.aborted = true;
                ExecutionStep { seq, actor: p, action: StepAction::AbortSignal, is_rmr: false }
            }
            ScheduleItem::Step(_) => {
                if c.procs[p.index()].is_returned() {
                    return Ok(None);
                }
                match self.shared_step(c, p, seq)? {
                    Some(s) => s,
                    None => return Ok(None),
                }
            }
        };
        c.trace.push(step);
        c.lineage.push(item);
        Ok(Some(step))
    }

    /// The step `p` would take next from `c`, without changing `c`.
    pub fn peek(&self, c: &Configuration, p: ProcessId) -> Result<Option<ExecutionStep>, ModelError> {
        let mut tmp = c.clone();
        self.step(&mut tmp, ScheduleItem::Step(p))
    }

    fn shared_step(&self, c: &mut Configuration, p: ProcessId, seq: u64) -> Result<Option<ExecutionStep>, ModelError> {
        let ceiling = self.opts.step_ceiling;
        if c.procs[p.index()].steps >= ceiling {
            return Err(ModelError::AlgorithmTooDeep { process: p, ceiling });
        }
        let phase = c.procs[p.index()].phase;
        let step = match phase {
            Phase::Halted => return Ok(None),
            Phase::Scan(i) => {
                let r = RegisterId::new(p, i);
                let s = self.do_read(c, p, r, seq);
                let st = &mut c.procs[p.index()];
                st.phase = if i + 1 < self.segments[p.index()] { Phase::Scan(i + 1) } else { Phase::Invoke };
                s
            }
            Phase::Invoke => {
                let r = self.invocation_register(p);
                let s = self.do_read(c, p, r, seq);
                c.procs[p.index()].phase = Phase::Run;
                s
            }
            Phase::Terminate { ret, next } => self.terminating_read(c, p, ret, next, seq),
            Phase::Run => {
                let aborted = c.procs[p.index()].aborted;
                let action = {
                    let st = &mut c.procs[p.index()];
                    self.alg.next(p, &mut st.locals, aborted)
                };
                match action {
                    Action::Read(r) => {
                        self.check_register(c, p, r)?;
                        let s = self.do_read(c, p, r, seq);
                        let v = s.action.value().expect("read carries a value");
                        let st = &mut c.procs[p.index()];
                        self.alg.observe(p, &mut st.locals, Observation::Read(v));
                        s
                    }
                    Action::Write(r, data) => {
                        self.check_register(c, p, r)?;
                        let s = self.do_write(c, p, r, data, seq);
                        let st = &mut c.procs[p.index()];
                        self.alg.observe(p, &mut st.locals, Observation::Wrote);
                        s
                    }
                    Action::TestAndSet(r) => {
                        self.check_register(c, p, r)?;
                        let cur = c.value(r);
                        let (mut s, acquired) = if cur.data == 0 {
                            (self.do_write(c, p, r, 1, seq), true)
                        } else {
                            (self.do_read(c, p, r, seq), false)
                        };
                        // A test-and-set is a read-modify-write: never served by a cache.
                        s.is_rmr = r.owner != p;
                        let st = &mut c.procs[p.index()];
                        self.alg.observe(p, &mut st.locals, Observation::Tas { acquired });
                        s
                    }
                    Action::Return(ret) => {
                        c.procs[p.index()].decided_at = Some(seq);
                        self.terminating_read(c, p, ret, 0, seq)
                    }
                    Action::Fault(message) => {
                        return Err(ModelError::SubjectFault { process: p, message: message.to_string() });
                    }
                }
            }
        };
        let st = &mut c.procs[p.index()];
        st.steps += 1;
        if st.first_step.is_none() {
            st.first_step = Some(seq);
        }
        if st.aborted {
            st.steps_since_abort += 1;
        }
        Ok(Some(step))
    }

    fn check_register(&self, c: &Configuration, p: ProcessId, r: RegisterId) -> Result<(), ModelError> {
        // The reserved register is engine territory.
        if c.is_valid_register(r) && r.index + 1 < self.segments[r.owner.index()] {
            Ok(())
        } else {
            Err(ModelError::InvalidRegister { process: p, register: r })
        }
    }

    fn terminating_read(&self, c: &mut Configuration, p: ProcessId, ret: Ret, next: u32, seq: u64) -> ExecutionStep {
        let r = RegisterId::new(p, next);
        let s = self.do_read(c, p, r, seq);
        let st = &mut c.procs[p.index()];
        st.term_reads.insert(r, seq);
        if next + 1 < self.segments[p.index()] {
            st.phase = Phase::Terminate { ret, next: next + 1 };
        } else {
            st.phase = Phase::Halted;
            st.status = Status::Returned(ret);
        }
        s
    }

    fn do_read(&self, c: &mut Configuration, p: ProcessId, r: RegisterId, seq: u64) -> ExecutionStep {
        let v = c.value(r);
        let st = &mut c.procs[p.index()];
        let cached = st.last_seen.get(&r) == Some(&v);
        st.last_seen.insert(r, v);
        ExecutionStep {
            seq,
            actor: p,
            action: StepAction::Read { register: r, value: v },
            is_rmr: !(r.owner == p || cached),
        }
    }

    fn do_write(&self, c: &mut Configuration, p: ProcessId, r: RegisterId, data: i64, seq: u64) -> ExecutionStep {
        let st = &mut c.procs[p.index()];
        let token = StateToken { process: p, step_count: st.steps + 1 };
        let v = RegisterValue { writer: p, token: Some(token), data };
        st.last_seen.insert(r, v);
        c.registers.insert(r, v);
        ExecutionStep { seq, actor: p, action: StepAction::Write { register: r, value: v }, is_rmr: r.owner != p }
    }
}
