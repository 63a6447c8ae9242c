//! Execution semantics: schedules, configurations, RMR accounting and the
//! knowledge and safety predicates defined over executions.

pub mod algorithm;
pub mod analysis;
pub mod config;
pub mod ids;
pub mod schedule;
pub mod serial;

pub use algorithm::{Action, Algorithm, Locals, Observation};
pub use analysis::{
    cache_set, hidden_set, indistinguishable, is_safe, knows_set, lost_set, rmr_counts, rmr_flag, safety_report,
    Pair, SafetyReport,
};
pub use config::{Configuration, Event, ExecutionStep, ExecutionTrace, Model, ModelError, ModelOptions, Phase, ProcState, StepAction};
pub use ids::{ProcessId, RegisterId, RegisterValue, Ret, StateToken, Status};
pub use schedule::{ParseItemError, Schedule, ScheduleItem};
