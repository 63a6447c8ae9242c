//! JSON forms of traces and configuration snapshots. Field order is fixed by
//! the struct definitions, so output is byte-stable for identical inputs.

use serde::{Deserialize, Serialize};

use super::config::{Configuration, ExecutionStep, StepAction};
use super::ids::{ProcessId, RegisterId, RegisterValue, Status};
use super::schedule::Schedule;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueJson {
    pub writer: ProcessId,
    /// Step count of the writer's state token; `null` for an initial value.
    pub token: Option<u64>,
    pub data: i64,
}

impl From<RegisterValue> for ValueJson {
    fn from(v: RegisterValue) -> Self {
        ValueJson { writer: v.writer, token: v.token.map(|t| t.step_count), data: v.data }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub seq: u64,
    pub actor: ProcessId,
    pub kind: String,
    pub register: Option<RegisterId>,
    pub value: Option<ValueJson>,
    pub rmr: bool,
}

impl From<&ExecutionStep> for StepJson {
    fn from(s: &ExecutionStep) -> Self {
        let kind = match s.action {
            StepAction::Read { .. } => "read",
            StepAction::Write { .. } => "write",
            StepAction::AbortSignal => "abort",
        };
        StepJson {
            seq: s.seq,
            actor: s.actor,
            kind: kind.to_string(),
            register: s.action.register(),
            value: s.action.value().map(ValueJson::from),
            rmr: s.is_rmr,
        }
    }
}

pub fn trace_json(steps: &[ExecutionStep]) -> Vec<StepJson> {
    steps.iter().map(StepJson::from).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterEntry {
    pub register: RegisterId,
    pub value: ValueJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessJson {
    pub id: ProcessId,
    pub status: Status,
    pub abort_received: bool,
    pub steps: u64,
    pub rmr: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotJson {
    pub lineage: Schedule,
    pub processes: Vec<ProcessJson>,
    pub registers: Vec<RegisterEntry>,
}

pub fn snapshot_json(c: &Configuration) -> SnapshotJson {
    let processes = c
        .processes()
        .map(|p| {
            let st = c.proc(p);
            ProcessJson {
                id: p,
                status: st.status,
                abort_received: st.aborted,
                steps: st.steps,
                rmr: super::analysis::rmr_of(c.trace(), p),
            }
        })
        .collect();
    let registers = c
        .written_registers()
        .iter()
        .map(|(&register, &v)| RegisterEntry { register, value: v.into() })
        .collect();
    SnapshotJson { lineage: c.lineage().clone(), processes, registers }
}
