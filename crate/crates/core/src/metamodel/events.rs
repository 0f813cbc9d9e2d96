//! Event types with single inheritance, and event instances.

use crate::diag::{codes, Diagnostic};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Declared event types, each with an optional parent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTypes {
    types: BTreeMap<String, Option<String>>,
}

impl EventTypes {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name`; `parent` may be declared later, [`check`](Self::check) resolves it.
    pub fn declare(&mut self, name: &str, parent: Option<&str>) -> bool {
        if self.types.contains_key(name) {
            return false;
        }
        self.types.insert(name.to_string(), parent.map(str::to_string));
        true
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.types.get(name).and_then(|p| p.as_deref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// True iff `name` equals `ancestor` or descends from it.
    pub fn is_a(&self, name: &str, ancestor: &str) -> bool {
        let mut seen = BTreeSet::new();
        let mut current = Some(name);
        while let Some(t) = current {
            if t == ancestor {
                return true;
            }
            if !seen.insert(t) {
                return false;
            }
            current = self.parent(t);
        }
        false
    }

    /// Unknown parents and inheritance cycles.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (name, parent) in &self.types {
            let path = format!("event:{name}");
            if let Some(p) = parent {
                if !self.types.contains_key(p) {
                    diags.push(Diagnostic::error(
                        codes::EVENT_UNKNOWN,
                        path.clone(),
                        format!("parent event type `{p}` is not declared"),
                    ));
                }
            }
            let mut seen = BTreeSet::new();
            let mut current = Some(name.as_str());
            while let Some(t) = current {
                if !seen.insert(t) {
                    diags.push(Diagnostic::error(
                        codes::EVENT_CYCLE,
                        path.clone(),
                        "event type hierarchy is cyclic",
                    ));
                    break;
                }
                current = self.parent(t);
            }
        }
        diags
    }
}

/// An occurrence of an event type emitted by a module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_type: String,
    pub source: String,
    pub timestamp: f64,
    #[serde(default)]
    pub payload: BTreeMap<String, String>,
}

impl Event {
    pub fn new(event_type: &str, source: &str, timestamp: f64) -> Self {
        Self {
            event_type: event_type.to_string(),
            source: source.to_string(),
            timestamp,
            payload: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hierarchy_walk() {
        let mut t = EventTypes::new();
        t.declare("RtException", None);
        t.declare("OutOfMemoryRtException", Some("RtException"));
        t.declare("LoadIncrease", None);
        assert!(t.check().is_empty());
        assert!(t.is_a("OutOfMemoryRtException", "RtException"));
        assert!(t.is_a("RtException", "RtException"));
        assert!(!t.is_a("RtException", "OutOfMemoryRtException"));
        assert!(!t.is_a("LoadIncrease", "RtException"));
    }

    #[test]
    fn cycles_and_unknown_parents() {
        let mut t = EventTypes::new();
        t.declare("A", Some("B"));
        t.declare("B", Some("A"));
        t.declare("C", Some("Missing"));
        let codes: Vec<_> = t.check().iter().map(|d| d.code).collect();
        assert!(codes.contains(&codes::EVENT_CYCLE));
        assert!(codes.contains(&codes::EVENT_UNKNOWN));
        assert!(!t.is_a("A", "C"));
    }
}
