//! A deterministic component-based application used as adaptable software.

use crate::error::{EngineError, Result};
use crate::metamodel::Event;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Name of the adaptable-software module in the layer diagrams.
pub const SOFTWARE_MODULE: &str = "mRUBiS";

pub const FAILURE_KINDS: [&str; 4] = ["crash", "oom", "hang", "poison"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lifecycle {
    Started,
    Stopped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Component {
    pub name: String,
    pub lifecycle: Lifecycle,
    pub params: BTreeMap<String, i64>,
    pub failure_kind: Option<String>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemState {
    pub components: BTreeMap<String, Component>,
    pub topology: Vec<(String, String)>,
    pub load: f64,
    /// Count of restarts and replacements, for scenario checks.
    pub reconfigurations: u64,
}

const COMPONENTS: [&str; 9] = [
    "Authentication Service",
    "Bid and Buy Service",
    "Inventory Service",
    "Query Service",
    "Reputation Service",
    "Persistence Service",
    "Item Filter",
    "Last Second Sales Filter",
    "Future Sales Item Filter",
];

const CONNECTORS: [(usize, usize); 9] = [(1, 2), (1, 4), (2, 3), (2, 6), (3, 6), (4, 7), (7, 8), (8, 9), (5, 6)];

impl Default for SystemState {
    fn default() -> Self {
        Self::marketplace()
    }
}

impl SystemState {
    /// Nine started components wired as a small marketplace.
    pub fn marketplace() -> Self {
        let components = COMPONENTS
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut params = BTreeMap::new();
                params.insert("threadPool".to_string(), 8);
                (
                    format!("c{}", i + 1),
                    Component {
                        name: name.to_string(),
                        lifecycle: Lifecycle::Started,
                        params,
                        failure_kind: None,
                        version: "1.0".to_string(),
                    },
                )
            })
            .collect();
        let topology = CONNECTORS
            .iter()
            .map(|(a, b)| (format!("c{a}"), format!("c{b}")))
            .collect();
        Self {
            components,
            topology,
            load: 0.3,
            reconfigurations: 0,
        }
    }

    fn component_mut(&mut self, id: &str) -> Result<&mut Component> {
        self.components
            .get_mut(id)
            .ok_or_else(|| EngineError::NoComponent(id.to_string()))
    }

    /// Fails a started component and returns the exception it raises.
    pub fn inject_failure(&mut self, id: &str, kind: &str, now: f64) -> Result<Event> {
        if !FAILURE_KINDS.contains(&kind) {
            return Err(EngineError::Control(format!("unknown failure kind `{kind}`")));
        }
        let c = self.component_mut(id)?;
        if c.lifecycle != Lifecycle::Started {
            return Err(EngineError::ComponentState(format!("`{id}` is not started")));
        }
        c.lifecycle = Lifecycle::Failed;
        c.failure_kind = Some(kind.to_string());
        Ok(exception(id, kind, now))
    }

    /// Exceptions observed by clients calling into failed components.
    pub fn request(&self, now: f64) -> Vec<Event> {
        self.components
            .iter()
            .filter(|(_, c)| c.lifecycle == Lifecycle::Failed)
            .map(|(id, c)| exception(id, c.failure_kind.as_deref().unwrap_or("crash"), now))
            .collect()
    }

    pub fn failed(&self) -> Vec<String> {
        self.components
            .iter()
            .filter(|(_, c)| c.lifecycle == Lifecycle::Failed)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Restart clears transient failures only; a poisoned component fails again.
    pub fn restart(&mut self, id: &str) -> Result<()> {
        let c = self.component_mut(id)?;
        if c.failure_kind.as_deref() == Some("poison") {
            c.lifecycle = Lifecycle::Failed;
        } else {
            c.lifecycle = Lifecycle::Started;
            c.failure_kind = None;
        }
        self.reconfigurations += 1;
        Ok(())
    }

    /// Deploys a fresh instance of the component.
    pub fn replace(&mut self, id: &str, version: Option<&str>) -> Result<()> {
        let c = self.component_mut(id)?;
        c.lifecycle = Lifecycle::Started;
        c.failure_kind = None;
        c.version = match version {
            Some(v) => v.to_string(),
            None => bump(&c.version),
        };
        self.reconfigurations += 1;
        Ok(())
    }

    pub fn set_param(&mut self, id: &str, key: &str, value: i64) -> Result<()> {
        self.component_mut(id)?.params.insert(key.to_string(), value);
        Ok(())
    }

    /// The part of the state mirrored by the architectural model.
    pub fn projection(&self) -> Value {
        json!({
            "components": self.components,
            "topology": self.topology,
            "load": self.load,
        })
    }

    /// Applies one planned reconfiguration: `{component, action, ...}`.
    pub fn apply(&mut self, step: &Value) -> Result<()> {
        let id = step["component"].as_str().unwrap_or_default();
        match step["action"].as_str().unwrap_or_default() {
            "restart" => self.restart(id),
            "replace" => self.replace(id, step["version"].as_str()),
            "set" => self.set_param(
                id,
                step["param"].as_str().unwrap_or_default(),
                step["value"].as_i64().unwrap_or_default(),
            ),
            other => Err(EngineError::Control(format!("unknown reconfiguration `{other}`"))),
        }
    }
}

fn exception(id: &str, kind: &str, now: f64) -> Event {
    let ty = if kind == "oom" {
        "OutOfMemoryRtException"
    } else {
        "RtException"
    };
    Event::new(ty, SOFTWARE_MODULE, now)
        .with("component", id)
        .with("kind", kind)
}

fn bump(version: &str) -> String {
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u64>().ok())
        .unwrap_or(0);
    format!("{}.0", major + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_endpoints_exist() {
        let s = SystemState::marketplace();
        assert_eq!(s.components.len(), 9);
        for (a, b) in &s.topology {
            assert!(s.components.contains_key(a) && s.components.contains_key(b));
        }
    }

    #[test]
    fn crash_emits_one_exception() {
        let mut s = SystemState::marketplace();
        let ev = s.inject_failure("c3", "crash", 1.0).unwrap();
        assert_eq!(ev.event_type, "RtException");
        assert_eq!(ev.payload["component"], "c3");
        assert_eq!(s.components["c3"].lifecycle, Lifecycle::Failed);
        assert_eq!(s.failed(), vec!["c3"]);
    }

    #[test]
    fn oom_uses_the_subtype() {
        let mut s = SystemState::marketplace();
        let ev = s.inject_failure("c3", "oom", 0.0).unwrap();
        assert_eq!(ev.event_type, "OutOfMemoryRtException");
    }

    #[test]
    fn injection_errors() {
        let mut s = SystemState::marketplace();
        assert_eq!(s.inject_failure("c42", "crash", 0.0).unwrap_err().code(), "E-NO-COMPONENT");
        s.inject_failure("c1", "crash", 0.0).unwrap();
        assert_eq!(s.inject_failure("c1", "crash", 0.0).unwrap_err().code(), "E-COMPONENT-STATE");
    }

    #[test]
    fn restart_does_not_cure_poison() {
        let mut s = SystemState::marketplace();
        s.inject_failure("c5", "poison", 0.0).unwrap();
        s.restart("c5").unwrap();
        assert_eq!(s.components["c5"].lifecycle, Lifecycle::Failed);
        s.replace("c5", None).unwrap();
        assert_eq!(s.components["c5"].lifecycle, Lifecycle::Started);
        assert_eq!(s.components["c5"].version, "2.0");
    }
}
