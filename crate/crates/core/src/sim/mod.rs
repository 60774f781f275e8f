//! Discrete-event simulation of the offloading system.

mod engine;
pub mod policy;
pub mod service;

use serde::{Deserialize, Serialize};

use crate::belief::Choice;

pub use engine::run_simulation;
pub use policy::{
    on_arrival, on_position_update, on_service_tick, ArrivalDecision, CloudView, Policy, PoissonCloud,
    PositionDecision, ServiceDecision, UpdateKind,
};
pub use service::{draw_service_completion, ServerPath, ServerProcess};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServedBy {
    MecServer,
    LocalDevice,
    LocalAfterRenege,
    LocalAfterPreempt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub arrival_time: f64,
    pub local_mean: f64,
    pub decision_trace: Vec<(f64, Choice)>,
    pub served_by: ServedBy,
    pub completion_time: f64,
    pub end_utility: f64,
    /// Position on joining the queue, if it did.
    pub entry_position: Option<u32>,
    /// Queue observations gathered by a learning task.
    pub observations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    ServiceStart,
    ServiceComplete,
    Renege,
    Balk,
    Preempt,
    StateSwitch,
    QsiUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub task: Option<usize>,
    /// Tasks in the system (waiting plus in service) after the event.
    pub queue_len: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimOutput {
    pub tasks: Vec<Task>,
    pub events: Vec<EventRecord>,
}

impl SimOutput {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}
