//! Per-instance execution history: the substrate for decision conditions.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Final-state marker recorded for runs that ended in an error.
pub const ABORTED_STATE: &str = "⊥(error)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpExecution {
    pub op: String,
    pub exit: String,
    pub start_time: f64,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: u64,
    pub initial_state: String,
    pub start_time: f64,
    pub end_time: f64,
    pub final_state: String,
    pub op_executions: Vec<OpExecution>,
}

impl RunRecord {
    pub fn is_aborted(&self) -> bool {
        self.final_state == ABORTED_STATE
    }
}

#[derive(Debug, Clone, Default)]
struct ExitStats {
    count: u64,
    /// Ordinal (1-based, among non-aborted runs) of the latest run containing this exit.
    last_ordinal: u64,
    last_end: f64,
}

#[derive(Debug, Clone, Default)]
struct OpStats {
    count: u64,
    last_end: f64,
    exits: HashMap<String, ExitStats>,
}

/// Counters over completed, non-aborted runs.
#[derive(Debug, Clone, Default)]
struct HistoryIndex {
    ok_runs: u64,
    ops: HashMap<String, OpStats>,
}

impl HistoryIndex {
    fn add(&mut self, run: &RunRecord) {
        if run.is_aborted() {
            return;
        }
        self.ok_runs += 1;
        let ordinal = self.ok_runs;
        for exec in &run.op_executions {
            if !self.ops.contains_key(&exec.op) {
                self.ops.insert(exec.op.clone(), OpStats::default());
            }
            let stats = self.ops.get_mut(&exec.op).expect("inserted above");
            stats.count += 1;
            stats.last_end = exec.end_time;
            if !stats.exits.contains_key(&exec.exit) {
                stats.exits.insert(exec.exit.clone(), ExitStats::default());
            }
            let exit = stats.exits.get_mut(&exec.exit).expect("inserted above");
            exit.count += 1;
            exit.last_ordinal = ordinal;
            exit.last_end = exec.end_time;
        }
    }
}

/// Append-only record of an instance's runs, plus the in-flight run.
#[derive(Debug, Clone, Default)]
pub struct ExecutionHistory {
    runs: Vec<RunRecord>,
    current: Option<RunRecord>,
    index: HistoryIndex,
}

impl PartialEq for ExecutionHistory {
    fn eq(&self, other: &Self) -> bool {
        self.runs == other.runs && self.current == other.current
    }
}

impl ExecutionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a history from completed runs (snapshot import).
    pub fn from_runs(runs: Vec<RunRecord>) -> Self {
        let mut index = HistoryIndex::default();
        for run in &runs {
            index.add(run);
        }
        Self {
            runs,
            current: None,
            index,
        }
    }

    pub fn runs(&self) -> &[RunRecord] {
        &self.runs
    }

    pub fn current(&self) -> Option<&RunRecord> {
        self.current.as_ref()
    }

    pub fn is_running(&self) -> bool {
        self.current.is_some()
    }

    pub fn last_run(&self) -> Option<&RunRecord> {
        self.runs.last()
    }

    /// End time of the latest completed run, aborted or not.
    pub fn last_end_time(&self) -> Option<f64> {
        self.runs.last().map(|r| r.end_time)
    }

    pub fn next_run_index(&self) -> u64 {
        self.runs.last().map_or(1, |r| r.run_index + 1)
    }

    pub fn begin_run(&mut self, initial_state: &str, start_time: f64) {
        debug_assert!(self.current.is_none(), "run already in flight");
        self.current = Some(RunRecord {
            run_index: self.next_run_index(),
            initial_state: initial_state.to_string(),
            start_time,
            end_time: start_time,
            final_state: String::new(),
            op_executions: Vec::new(),
        });
    }

    pub fn record_op(&mut self, exec: OpExecution) {
        if let Some(run) = self.current.as_mut() {
            run.op_executions.push(exec);
        }
    }

    /// Closes the in-flight run; `final_state` is [`ABORTED_STATE`] for errors.
    pub fn finish_run(&mut self, final_state: &str, end_time: f64) -> Option<&RunRecord> {
        let mut run = self.current.take()?;
        run.final_state = final_state.to_string();
        run.end_time = end_time.max(run.start_time);
        self.index.add(&run);
        self.runs.push(run);
        self.runs.last()
    }

    pub fn abort_run(&mut self, end_time: f64) -> Option<&RunRecord> {
        self.finish_run(ABORTED_STATE, end_time)
    }

    fn current_ok(&self) -> u64 {
        u64::from(self.current.is_some())
    }

    /// Non-aborted completed runs plus the in-flight run.
    pub fn run_count(&self) -> u64 {
        self.index.ok_runs + self.current_ok()
    }

    pub fn executions(&self, op: &str, exit: Option<&str>) -> u64 {
        let indexed = self.index.ops.get(op).map_or(0, |s| match exit {
            None => s.count,
            Some(e) => s.exits.get(e).map_or(0, |x| x.count),
        });
        let current = self.current.as_ref().map_or(0, |run| {
            run.op_executions
                .iter()
                .filter(|x| x.op == op && exit.map_or(true, |e| x.exit == e))
                .count() as u64
        });
        indexed + current
    }

    pub fn runs_since(&self, op: &str, exit: &str) -> f64 {
        if let Some(run) = &self.current {
            if run.op_executions.iter().any(|x| x.op == op && x.exit == exit) {
                return 0.0;
            }
        }
        let last = self
            .index
            .ops
            .get(op)
            .and_then(|s| s.exits.get(exit))
            .map(|x| x.last_ordinal);
        match last {
            Some(ordinal) => (self.run_count() - ordinal) as f64,
            None => f64::INFINITY,
        }
    }

    pub fn seconds_since(&self, op: &str, exit: Option<&str>, now: f64) -> f64 {
        if let Some(run) = &self.current {
            if let Some(x) = run
                .op_executions
                .iter()
                .rev()
                .find(|x| x.op == op && exit.map_or(true, |e| x.exit == e))
            {
                return now - x.end_time;
            }
        }
        let last = self.index.ops.get(op).and_then(|s| match exit {
            None => (s.count > 0).then_some(s.last_end),
            Some(e) => s.exits.get(e).map(|x| x.last_end),
        });
        last.map_or(f64::INFINITY, |t| now - t)
    }

    /// Per (operation, exit) success counters over completed runs.
    pub fn exit_counts(&self) -> Vec<(String, String, u64)> {
        let mut out: Vec<_> = self
            .index
            .ops
            .iter()
            .flat_map(|(op, s)| s.exits.iter().map(move |(e, x)| (op.clone(), e.clone(), x.count)))
            .collect();
        out.sort();
        out
    }
}

// Snapshots are taken at quiescence, so only completed runs are serialized.
impl Serialize for ExecutionHistory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.runs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExecutionHistory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Vec::<RunRecord>::deserialize(deserializer).map(Self::from_runs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(h: &mut ExecutionHistory, t: f64, ops: &[(&str, &str)]) {
        h.begin_run("Start", t);
        for (op, exit) in ops {
            h.record_op(OpExecution {
                op: op.to_string(),
                exit: exit.to_string(),
                start_time: t,
                end_time: t,
            });
        }
        h.finish_run("Done", t);
    }

    #[test]
    fn aborted_runs_are_invisible_to_counters() {
        let mut h = ExecutionHistory::new();
        run(&mut h, 0.0, &[("A", "x")]);
        h.begin_run("Start", 1.0);
        h.record_op(OpExecution {
            op: "A".into(),
            exit: "x".into(),
            start_time: 1.0,
            end_time: 1.0,
        });
        h.abort_run(1.0);
        assert_eq!(h.runs().len(), 2);
        assert_eq!(h.run_count(), 1);
        assert_eq!(h.executions("A", Some("x")), 1);
        assert_eq!(h.runs_since("A", "x"), 0.0);
    }

    #[test]
    fn in_flight_run_is_visible() {
        let mut h = ExecutionHistory::new();
        run(&mut h, 0.0, &[("A", "x")]);
        h.begin_run("Start", 2.0);
        assert_eq!(h.runs_since("A", "x"), 1.0);
        h.record_op(OpExecution {
            op: "A".into(),
            exit: "x".into(),
            start_time: 2.0,
            end_time: 2.5,
        });
        assert_eq!(h.runs_since("A", "x"), 0.0);
        assert_eq!(h.seconds_since("A", None, 3.0), 0.5);
        assert_eq!(h.run_count(), 2);
    }

    #[test]
    fn run_indices_increase() {
        let mut h = ExecutionHistory::new();
        for i in 0..3 {
            run(&mut h, f64::from(i), &[]);
        }
        let idx: Vec<_> = h.runs().iter().map(|r| r.run_index).collect();
        assert_eq!(idx, vec![1, 2, 3]);
    }
}
