//! Trigger conditions, event matching and run scheduling.

mod matching;
mod scheduler;
mod spec;

pub use matching::{match_event, match_interception, InterceptionPoint};
pub use scheduler::{edge_key, Activation, PendingActivation, PeriodAnchor, PeriodicSource, Scheduler, TargetInfo};
pub use spec::{format_period, micros_to_seconds, parse_duration, parse_trigger, EventPattern, TriggerSpec};
