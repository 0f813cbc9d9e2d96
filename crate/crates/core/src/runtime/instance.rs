//! Live module instances: a megamodel plus bindings, models and history.

use super::store::ModelId;
use crate::condition::ExecutionHistory;
use crate::metamodel::Megamodel;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Resolved target of an operation's use edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpBinding {
    /// Registered software-module key.
    Software(String),
    /// Megamodel module instance invoked synchronously.
    Module(String),
}

#[derive(Debug, Clone)]
pub struct ModuleInstance {
    pub name: String,
    pub megamodel: Arc<Megamodel>,
    /// The megamodel was edited through reflection and diverges from the registry.
    pub customized: bool,
    pub models: BTreeMap<String, ModelId>,
    pub bindings: BTreeMap<String, OpBinding>,
    pub history: ExecutionHistory,
}

impl ModuleInstance {
    pub fn new(name: &str, megamodel: Arc<Megamodel>) -> Self {
        Self {
            name: name.to_string(),
            megamodel,
            customized: false,
            models: BTreeMap::new(),
            bindings: BTreeMap::new(),
            history: ExecutionHistory::new(),
        }
    }

    pub fn is_running(&self) -> bool {
        self.history.is_running()
    }

    /// `(start, end)` of the latest completed run.
    pub fn last_run(&self) -> Option<(f64, f64)> {
        self.history.last_run().map(|r| (r.start_time, r.end_time))
    }
}
