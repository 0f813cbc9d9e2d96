//! Snapshot export and import: a JSON container embedding the textual models.

use crate::condition::ExecutionHistory;
use crate::diag::Diagnostic;
use crate::dsl::{parse_events, parse_fld_file, parse_ld_file, serialize_events, serialize_fld, serialize_ld};
use crate::error::{EngineError, Result};
use crate::runtime::{Engine, ModelStore, ModuleInstance, RuntimeModel};
use crate::trigger::Scheduler;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const SNAPSHOT_FORMAT: &str = "megaloop-snapshot/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InstanceSnapshot {
    pub megamodel: String,
    /// Full text of a megamodel edited through reflection.
    #[serde(rename = "override")]
    pub override_fld: Option<String>,
    pub models: BTreeMap<String, u64>,
    pub history: ExecutionHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Snapshot {
    pub format: String,
    pub engine_time: f64,
    pub architecture: String,
    pub event_types: String,
    pub megamodels: BTreeMap<String, String>,
    pub runtime_models: Vec<RuntimeModel>,
    pub instances: BTreeMap<String, InstanceSnapshot>,
    pub scheduler: Scheduler,
}

fn snap_err(what: &str, diags: Vec<Diagnostic>) -> EngineError {
    let detail = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
    EngineError::SnapParse(format!("{what}: {detail}"))
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("snapshot values are always serializable");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text).map_err(|e| EngineError::SnapParse(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(EngineError::SnapParse(format!("unsupported format `{}`", snap.format)));
        }
        Ok(snap)
    }
}

impl Engine {
    /// Exports the engine state; only at quiescence.
    pub fn export_snapshot(&self) -> Result<Snapshot> {
        if !self.is_quiescent() {
            return Err(EngineError::Reentry("snapshot export during a run".into()));
        }
        Ok(Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            engine_time: self.now(),
            architecture: serialize_ld(&self.arch),
            event_types: serialize_events(&self.event_types),
            megamodels: self
                .registry
                .iter()
                .map(|(name, m)| (name.clone(), serialize_fld(m)))
                .collect(),
            runtime_models: self.store.iter().cloned().collect(),
            instances: self
                .instances
                .values()
                .map(|i| {
                    let snap = InstanceSnapshot {
                        megamodel: self
                            .arch
                            .module(&i.name)
                            .map_or_else(|| i.megamodel.name.clone(), |m| m.source_ref.clone()),
                        override_fld: i.customized.then(|| serialize_fld(&i.megamodel)),
                        models: i.models.clone(),
                        history: i.history.clone(),
                    };
                    (i.name.clone(), snap)
                })
                .collect(),
            scheduler: self.scheduler.clone(),
        })
    }

    /// Replaces this engine's state with a snapshot; software registrations,
    /// environment and clock are kept and engine time is re-anchored.
    pub fn import_snapshot(&mut self, snap: &Snapshot) -> Result<()> {
        if !self.is_quiescent() {
            return Err(EngineError::Reentry("snapshot import during a run".into()));
        }
        let events = if snap.event_types.trim().is_empty() {
            crate::metamodel::EventTypes::new()
        } else {
            parse_events(&snap.event_types).map_err(|d| snap_err("eventTypes", d))?
        };
        let mut registry = crate::metamodel::Registry::new();
        for (name, text) in &snap.megamodels {
            let m = parse_fld_file(text, &format!("snapshot:{name}")).map_err(|d| snap_err(name, d))?;
            registry.insert(name.clone(), Arc::new(m));
        }
        let arch = parse_ld_file(&snap.architecture, "snapshot:architecture").map_err(|d| snap_err("architecture", d))?;
        let mut instances = BTreeMap::new();
        for (name, i) in &snap.instances {
            let (megamodel, customized) = match &i.override_fld {
                Some(text) => (
                    Arc::new(parse_fld_file(text, &format!("snapshot:{name}")).map_err(|d| snap_err(name, d))?),
                    true,
                ),
                None => (
                    registry
                        .get(&i.megamodel)
                        .cloned()
                        .ok_or_else(|| EngineError::SnapParse(format!("instance `{name}` uses unknown `{}`", i.megamodel)))?,
                    false,
                ),
            };
            let mut inst = ModuleInstance::new(name, megamodel);
            inst.customized = customized;
            inst.models = i.models.clone();
            inst.history = i.history.clone();
            instances.insert(name.clone(), inst);
        }
        let previous = std::mem::replace(&mut self.event_types, events);
        let diags = self.validate(&arch, &registry);
        if !diags.is_empty() {
            self.event_types = previous;
            return Err(snap_err("architecture", diags));
        }
        self.registry = registry;
        self.arch = arch;
        self.instances = instances;
        self.store = ModelStore::from_models(snap.runtime_models.clone());
        self.scheduler = snap.scheduler.clone();
        self.deferred.clear();
        self.offset_micros = 0;
        self.offset_micros = crate::runtime::clock::to_micros(snap.engine_time) - crate::runtime::clock::to_micros(self.now());
        self.rebuild_bindings();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupt_input_is_rejected() {
        assert_eq!(Snapshot::from_json("{\"format\": ").unwrap_err().code(), "E-SNAP-PARSE");
        assert_eq!(Snapshot::from_json("[]").unwrap_err().code(), "E-SNAP-PARSE");
    }
}
