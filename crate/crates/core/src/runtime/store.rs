//! Runtime models held by the engine and handed to operations per usage.

use crate::metamodel::ModelStereotype;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

pub type ModelId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeModel {
    pub id: ModelId,
    pub name: String,
    pub kind: Option<ModelStereotype>,
    pub body: Value,
    /// Incremented on every write, annotation or replacement.
    pub revision: u64,
    pub annotated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelStore {
    models: BTreeMap<ModelId, RuntimeModel>,
    next_id: ModelId,
}

impl ModelStore {
    pub fn new() -> Self {
        Self {
            models: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn create(&mut self, name: &str, kind: Option<ModelStereotype>, body: Value) -> ModelId {
        let id = self.next_id.max(1);
        self.next_id = id + 1;
        self.models.insert(
            id,
            RuntimeModel {
                id,
                name: name.to_string(),
                kind,
                body,
                revision: 0,
                annotated: false,
            },
        );
        id
    }

    pub fn get(&self, id: ModelId) -> Option<&RuntimeModel> {
        self.models.get(&id)
    }

    pub fn get_mut(&mut self, id: ModelId) -> Option<&mut RuntimeModel> {
        self.models.get_mut(&id)
    }

    pub fn remove(&mut self, id: ModelId) -> Option<RuntimeModel> {
        self.models.remove(&id)
    }

    pub fn contains(&self, id: ModelId) -> bool {
        self.models.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RuntimeModel> {
        self.models.values()
    }

    /// Replaces the body, keeping the model's identity.
    pub fn replace_body(&mut self, id: ModelId, body: Value) -> bool {
        match self.models.get_mut(&id) {
            Some(m) => {
                m.body = body;
                m.revision += 1;
                true
            }
            None => false,
        }
    }

    /// Rebuilds a store from exported models (snapshot import).
    pub fn from_models(models: Vec<RuntimeModel>) -> Self {
        let next_id = models.iter().map(|m| m.id).max().unwrap_or(0) + 1;
        Self {
            models: models.into_iter().map(|m| (m.id, m)).collect(),
            next_id,
        }
    }
}
