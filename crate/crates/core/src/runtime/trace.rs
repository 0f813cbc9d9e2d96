//! Trace entries, run results and the quiescence audit log.

use crate::metamodel::Event;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TraceKind {
    OpStart,
    OpEnd,
    Decision,
    EnterState,
    Error,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::OpStart => "opStart",
            Self::OpEnd => "opEnd",
            Self::Decision => "decision",
            Self::EnterState => "enterState",
            Self::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: f64,
    pub instance: String,
    pub kind: TraceKind,
    pub name: String,
    /// Exit of an operation, target of a decision branch.
    pub detail: Option<String>,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6} {} {} {} {}",
            self.time,
            self.instance,
            self.kind.as_str(),
            self.name,
            self.detail.as_deref().unwrap_or("-")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub instance: String,
    pub initial_state: String,
    pub final_state: String,
    pub destructed: bool,
    pub start_time: f64,
    pub end_time: f64,
    pub trace: Vec<TraceEntry>,
}

impl RunResult {
    /// `(operation, exit)` pairs of completed operations, nested runs included.
    pub fn op_sequence(&self) -> Vec<(String, String)> {
        op_sequence(&self.trace)
    }
}

pub fn op_sequence(trace: &[TraceEntry]) -> Vec<(String, String)> {
    trace
        .iter()
        .filter(|e| e.kind == TraceKind::OpEnd)
        .map(|e| (e.name.clone(), e.detail.clone().unwrap_or_default()))
        .collect()
}

/// Engine time plus a logical sequence number, totally ordered.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Stamp {
    pub time: f64,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunCause {
    Event(Event),
    Periodic,
    Direct,
}

/// A top-level run: the interval during which the engine was not quiescent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInterval {
    pub instance: String,
    pub initial_state: String,
    pub final_state: String,
    pub start: Stamp,
    pub end: Stamp,
    pub cause: RunCause,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub at: Stamp,
    pub what: String,
    /// Applied immediately by a synchronously intercepting run.
    pub interception: bool,
    pub structural: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    pub runs: Vec<RunInterval>,
    pub mutations: Vec<MutationRecord>,
}

impl Audit {
    /// Structural mutations that fell strictly inside a run interval.
    pub fn quiescence_violations(&self) -> Vec<&MutationRecord> {
        self.mutations
            .iter()
            .filter(|m| m.structural || !m.interception)
            .filter(|m| {
                self.runs
                    .iter()
                    .any(|r| r.start.partial_cmp(&m.at) == Some(std::cmp::Ordering::Less) && m.at < r.end)
            })
            .collect()
    }

    pub fn aborted_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.aborted).count()
    }
}
