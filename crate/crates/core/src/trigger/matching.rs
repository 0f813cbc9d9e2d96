//! Matching events against the trigger of a sense edge.

use super::spec::{EventPattern, TriggerSpec};
use crate::metamodel::{Event, EventTypes, SenseEdge};

/// Which side of an operation an interception event was emitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterceptionPoint {
    Before,
    After,
}

impl InterceptionPoint {
    pub fn event_type(self, op: &str) -> String {
        match self {
            Self::Before => format!("Before[{op}]"),
            Self::After => format!("After[{op}]"),
        }
    }
}

/// True iff `event` comes from the sensed module and its type is one of the
/// listed types or a descendant of one.
pub fn match_event(spec: &TriggerSpec, event: &Event, edge: &SenseEdge, types: &EventTypes) -> bool {
    if event.source != edge.sensed {
        return false;
    }
    spec.events.iter().any(|p| match p {
        EventPattern::Type(t) => types.is_a(&event.event_type, t),
        EventPattern::Before(_) | EventPattern::After(_) => false,
    })
}

/// True iff the trigger intercepts `op` at `point` and the sensed module is
/// part of the executing call chain.
pub fn match_interception(
    spec: &TriggerSpec,
    edge: &SenseEdge,
    point: InterceptionPoint,
    op: &str,
    chain: &[&str],
) -> bool {
    if !chain.contains(&edge.sensed.as_str()) {
        return false;
    }
    spec.events.iter().any(|p| match (p, point) {
        (EventPattern::Before(o), InterceptionPoint::Before) | (EventPattern::After(o), InterceptionPoint::After) => {
            o == op
        }
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metamodel::EdgeMode;
    use crate::trigger::parse_trigger;

    fn edge(sensed: &str, trigger: &str) -> SenseEdge {
        SenseEdge {
            sensing: "selfRepair".into(),
            sensed: sensed.into(),
            mode: EdgeMode::Read,
            trigger: Some(parse_trigger(trigger).unwrap()),
        }
    }

    fn types() -> EventTypes {
        let mut t = EventTypes::new();
        t.declare("RtException", None);
        t.declare("OutOfMemoryRtException", Some("RtException"));
        t.declare("HeapExhausted", Some("OutOfMemoryRtException"));
        t.declare("LoadIncrease", None);
        t
    }

    #[test]
    fn type_hierarchy_and_source() {
        let e = edge("mRUBiS", "RtException; 10s; Monitor;");
        let spec = e.trigger.clone().unwrap();
        let t = types();
        let ev = |ty: &str, src: &str| Event::new(ty, src, 0.0);
        assert!(match_event(&spec, &ev("RtException", "mRUBiS"), &e, &t));
        assert!(match_event(&spec, &ev("OutOfMemoryRtException", "mRUBiS"), &e, &t));
        assert!(match_event(&spec, &ev("HeapExhausted", "mRUBiS"), &e, &t));
        assert!(!match_event(&spec, &ev("LoadIncrease", "mRUBiS"), &e, &t));
        assert!(!match_event(&spec, &ev("RtException", "other"), &e, &t));
    }

    #[test]
    fn interception_needs_sensed_in_chain() {
        let e = edge("selfRepair", "After[DeepCheck]; ; CheckStrategies;");
        let spec = e.trigger.clone().unwrap();
        let after = InterceptionPoint::After;
        assert!(match_interception(&spec, &e, after, "DeepCheck", &["selfRepair", "selfRepairA"]));
        assert!(!match_interception(&spec, &e, InterceptionPoint::Before, "DeepCheck", &["selfRepair"]));
        assert!(!match_interception(&spec, &e, after, "Repair", &["selfRepair"]));
        assert!(!match_interception(&spec, &e, after, "DeepCheck", &["other"]));
        assert_eq!(after.event_type("DeepCheck"), "After[DeepCheck]");
    }
}
