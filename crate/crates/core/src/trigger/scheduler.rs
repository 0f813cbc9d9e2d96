//! Pending activations, period gating and deterministic selection.

use crate::metamodel::Event;
use crate::runtime::clock::{from_micros, to_micros};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// What a period is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PeriodAnchor {
    /// End of the previous run to start of the next.
    #[default]
    EndToStart,
    /// Start of the previous run to start of the next.
    StartToStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingActivation {
    pub instance: String,
    pub initial_state: String,
    pub cause: Option<Event>,
    pub enqueue_time: f64,
    pub period_micros: u64,
    pub seq: u64,
}

/// An event-free trigger: fires whenever its gate opens.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSource {
    pub instance: String,
    pub initial_state: String,
    pub period_micros: u64,
    pub armed_at: f64,
}

/// What the scheduler needs to know about a target instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetInfo {
    pub layer: u32,
    /// `(start, end)` of the latest completed run.
    pub last_run: Option<(f64, f64)>,
    pub running: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub instance: String,
    pub initial_state: String,
    pub cause: Option<Event>,
    pub ready_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scheduler {
    pending: Vec<PendingActivation>,
    /// Arm time of each periodic trigger, keyed by `sensing<-sensed`.
    armed: BTreeMap<String, f64>,
    anchor: PeriodAnchor,
    next_seq: u64,
}

pub fn edge_key(sensing: &str, sensed: &str) -> String {
    format!("{sensing}<-{sensed}")
}

impl Scheduler {
    pub fn new(anchor: PeriodAnchor) -> Self {
        Self {
            anchor,
            ..Self::default()
        }
    }

    pub fn anchor(&self) -> PeriodAnchor {
        self.anchor
    }

    pub fn set_anchor(&mut self, anchor: PeriodAnchor) {
        self.anchor = anchor;
    }

    pub fn pending(&self) -> &[PendingActivation] {
        &self.pending
    }

    /// Queues an activation; returns false if one is already pending for the
    /// same instance and initial state (coalescing).
    pub fn enqueue(
        &mut self,
        instance: &str,
        initial_state: &str,
        cause: Option<Event>,
        now: f64,
        period_micros: u64,
    ) -> bool {
        if self
            .pending
            .iter()
            .any(|p| p.instance == instance && p.initial_state == initial_state)
        {
            return false;
        }
        self.next_seq += 1;
        self.pending.push(PendingActivation {
            instance: instance.to_string(),
            initial_state: initial_state.to_string(),
            cause,
            enqueue_time: now,
            period_micros,
            seq: self.next_seq,
        });
        true
    }

    /// Drops pending activations of instances that no longer exist.
    pub fn retain_instances(&mut self, alive: impl Fn(&str) -> bool) {
        self.pending.retain(|p| alive(&p.instance));
        self.armed.retain(|k, _| k.split("<-").next().is_some_and(&alive));
    }

    pub fn arm(&mut self, sensing: &str, sensed: &str, now: f64) {
        self.armed.entry(edge_key(sensing, sensed)).or_insert(now);
    }

    pub fn disarm(&mut self, sensing: &str, sensed: &str) {
        self.armed.remove(&edge_key(sensing, sensed));
    }

    pub fn armed_at(&self, sensing: &str, sensed: &str) -> Option<f64> {
        // Matched in place: this sits on the idle path and must not allocate.
        self.armed
            .iter()
            .find(|(k, _)| {
                k.strip_prefix(sensing)
                    .and_then(|r| r.strip_prefix("<-"))
                    .is_some_and(|r| r == sensed)
            })
            .map(|(_, t)| *t)
    }

    /// Earliest time (micros) at which a run may start; `None` if no run yet.
    pub fn gate_opens(&self, period_micros: u64, last_run: Option<(f64, f64)>) -> Option<i64> {
        last_run.map(|(start, end)| {
            let anchor = match self.anchor {
                PeriodAnchor::EndToStart => end,
                PeriodAnchor::StartToStart => start,
            };
            to_micros(anchor) + period_micros as i64
        })
    }

    pub fn gate_open(&self, period_micros: u64, last_run: Option<(f64, f64)>, now: f64) -> bool {
        self.gate_opens(period_micros, last_run)
            .map_or(true, |t| to_micros(now) >= t)
    }

    fn candidates(
        &self,
        periodic: &[PeriodicSource],
        info: &dyn Fn(&str) -> Option<TargetInfo>,
    ) -> Vec<(i64, u32, String, u64, Activation, Option<usize>)> {
        let mut out = Vec::new();
        for (i, p) in self.pending.iter().enumerate() {
            let Some(t) = info(&p.instance) else { continue };
            if t.running {
                continue;
            }
            let enq = to_micros(p.enqueue_time);
            let ready = self.gate_opens(p.period_micros, t.last_run).map_or(enq, |g| g.max(enq));
            out.push((
                enq,
                t.layer,
                p.instance.clone(),
                p.seq,
                Activation {
                    instance: p.instance.clone(),
                    initial_state: p.initial_state.clone(),
                    cause: p.cause.clone(),
                    ready_time: from_micros(ready),
                },
                Some(i),
            ));
        }
        for p in periodic {
            let Some(t) = info(&p.instance) else { continue };
            if t.running {
                continue;
            }
            let due = self
                .gate_opens(p.period_micros, t.last_run)
                .unwrap_or_else(|| to_micros(p.armed_at));
            out.push((
                due,
                t.layer,
                p.instance.clone(),
                u64::MAX,
                Activation {
                    instance: p.instance.clone(),
                    initial_state: p.initial_state.clone(),
                    cause: None,
                    ready_time: from_micros(due),
                },
                None,
            ));
        }
        out
    }

    /// The next activation to run at `now`: oldest first, then lower layer,
    /// then instance name.
    pub fn next_action(
        &mut self,
        now: f64,
        periodic: &[PeriodicSource],
        info: &dyn Fn(&str) -> Option<TargetInfo>,
    ) -> Option<Activation> {
        let now_us = to_micros(now);
        let best = self
            .candidates(periodic, info)
            .into_iter()
            .filter(|c| to_micros(c.4.ready_time) <= now_us)
            .min_by(|a, b| (a.0, a.1, &a.2, a.3).cmp(&(b.0, b.1, &b.2, b.3)))?;
        if let Some(i) = best.5 {
            self.pending.remove(i);
        }
        Some(best.4)
    }

    /// Earliest time at which some activation becomes ready.
    pub fn next_wake(&self, periodic: &[PeriodicSource], info: &dyn Fn(&str) -> Option<TargetInfo>) -> Option<f64> {
        self.candidates(periodic, info)
            .into_iter()
            .map(|c| to_micros(c.4.ready_time))
            .min()
            .map(from_micros)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(layer: u32, last_run: Option<(f64, f64)>) -> Option<TargetInfo> {
        Some(TargetInfo {
            layer,
            last_run,
            running: false,
        })
    }

    #[test]
    fn gate_delays_pending_activation() {
        let mut s = Scheduler::default();
        assert!(s.enqueue("selfRepair", "Monitor", None, 6.0, 10_000_000));
        assert!(!s.enqueue("selfRepair", "Monitor", None, 7.0, 10_000_000));
        let f = |_: &str| info(1, Some((1.0, 2.0)));
        assert_eq!(s.next_action(11.999_999, &[], &f), None);
        assert_eq!(s.next_wake(&[], &f), Some(12.0));
        let a = s.next_action(12.0, &[], &f).unwrap();
        assert_eq!(a.initial_state, "Monitor");
        assert!(s.pending().is_empty());
    }

    #[test]
    fn first_run_passes_gate() {
        let mut s = Scheduler::default();
        s.enqueue("a", "S", None, 0.5, 60_000_000);
        assert!(s.next_action(0.5, &[], &|_| info(1, None)).is_some());
    }

    #[test]
    fn tie_break_by_layer_then_name() {
        let mut s = Scheduler::default();
        s.enqueue("strategies", "S", None, 1.0, 0);
        s.enqueue("zeta", "S", None, 1.0, 0);
        s.enqueue("alpha", "S", None, 1.0, 0);
        let f = |name: &str| info(if name == "strategies" { 2 } else { 1 }, None);
        let order: Vec<String> = (0..3)
            .map(|_| s.next_action(1.0, &[], &f).unwrap().instance)
            .collect();
        assert_eq!(order, ["alpha", "zeta", "strategies"]);
    }

    #[test]
    fn periodic_sources_and_anchor() {
        let mut s = Scheduler::default();
        let src = PeriodicSource {
            instance: "opt".into(),
            initial_state: "Monitor".into(),
            period_micros: 60_000_000,
            armed_at: 0.0,
        };
        let periodic = [src];
        assert!(s.next_action(0.0, &periodic, &|_| info(1, None)).is_some());
        let after = |_: &str| info(1, Some((0.0, 0.05)));
        assert_eq!(s.next_wake(&periodic, &after), Some(60.05));
        s.set_anchor(PeriodAnchor::StartToStart);
        assert_eq!(s.next_wake(&periodic, &after), Some(60.0));
    }
}
