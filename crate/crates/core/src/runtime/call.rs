//! The interface between the interpreter and software modules.

use super::engine::Engine;
use super::store::RuntimeModel;
use crate::error::{EngineError, Result};
use crate::metamodel::{Event, Operation, UsageKind};
use crate::reflect::{Edit, ReflectionView};
use serde_json::Value;

/// Implementation of basic operations; returns the exit taken.
pub trait SoftwareModule: Send + Sync {
    fn invoke(&self, call: &mut OpCall<'_>) -> Result<String>;
}

impl<F> SoftwareModule for F
where
    F: Fn(&mut OpCall<'_>) -> Result<String> + Send + Sync,
{
    fn invoke(&self, call: &mut OpCall<'_>) -> Result<String> {
        self(call)
    }
}

/// The adaptable software as seen by the control channel and scripts.
pub trait Environment: Send {
    /// Executes a command such as `inject c3 crash`; returns the events it raised
    /// and a payload line for the response.
    fn command(&mut self, verb: &str, args: &[&str], now: f64) -> Result<(Vec<Event>, String)>;
}

/// One dispatch of a basic operation.
pub struct OpCall<'e> {
    pub(crate) engine: &'e mut Engine,
    pub(crate) instance: String,
    pub(crate) op: &'e Operation,
}

impl<'e> OpCall<'e> {
    pub fn instance(&self) -> &str {
        &self.instance
    }

    pub fn operation(&self) -> &Operation {
        self.op
    }

    pub fn now(&self) -> f64 {
        self.engine.now()
    }

    /// Consumes compute time on the engine clock.
    pub fn spend(&self, seconds: f64) {
        self.engine.clock.spend(seconds);
    }

    pub fn usage(&self, slot: &str) -> Option<UsageKind> {
        self.op.usages.iter().find(|u| u.slot == slot).map(|u| u.kind)
    }

    fn require(&self, slot: &str, allowed: &[UsageKind]) -> Result<()> {
        match self.usage(slot) {
            Some(k) if allowed.contains(&k) => Ok(()),
            Some(k) => Err(EngineError::ModelAccess(format!(
                "`{}` declares `{}` on `{slot}`, which does not permit this access",
                self.op.name,
                k.keyword()
            ))),
            None => Err(EngineError::ModelAccess(format!(
                "`{}` declares no usage of `{slot}`",
                self.op.name
            ))),
        }
    }

    fn model_id(&self, slot: &str) -> Result<u64> {
        self.engine.slot_model(&self.instance, slot).ok_or_else(|| {
            EngineError::ModelMissing(format!("slot `{slot}` of `{}` has no model", self.instance))
        })
    }

    pub fn model(&self, slot: &str) -> Result<&RuntimeModel> {
        self.require(slot, &UsageKind::ALL)?;
        let id = self.model_id(slot)?;
        self.engine
            .store
            .get(id)
            .ok_or_else(|| EngineError::ModelMissing(format!("model {id} for `{slot}` was removed")))
    }

    pub fn read(&self, slot: &str) -> Result<&Value> {
        self.model(slot).map(|m| &m.body)
    }

    fn mutate(&mut self, slot: &str, allowed: &[UsageKind], annotate: bool, f: impl FnOnce(&mut Value)) -> Result<()> {
        self.require(slot, allowed)?;
        let id = self.model_id(slot)?;
        let m = self
            .engine
            .store
            .get_mut(id)
            .ok_or_else(|| EngineError::ModelMissing(format!("model {id} for `{slot}` was removed")))?;
        f(&mut m.body);
        m.revision += 1;
        m.annotated |= annotate;
        Ok(())
    }

    pub fn write(&mut self, slot: &str, body: Value) -> Result<()> {
        self.mutate(slot, &[UsageKind::Create, UsageKind::Write], false, |b| *b = body)
    }

    pub fn update(&mut self, slot: &str, f: impl FnOnce(&mut Value)) -> Result<()> {
        self.mutate(slot, &[UsageKind::Create, UsageKind::Write], false, f)
    }

    /// Enriches a model without affecting the software; marks it annotated.
    pub fn annotate(&mut self, slot: &str, f: impl FnOnce(&mut Value)) -> Result<()> {
        self.mutate(
            slot,
            &[UsageKind::Create, UsageKind::Write, UsageKind::Annotate],
            true,
            f,
        )
    }

    /// Instance bound to a megamodel-ref slot (procedural reflection).
    pub fn reflected(&self, slot: &str) -> Result<String> {
        self.require(slot, &UsageKind::ALL)?;
        self.engine.reflected_instance(&self.instance, slot).ok_or_else(|| {
            EngineError::ModelMissing(format!("megamodel-ref slot `{slot}` of `{}` is not bound", self.instance))
        })
    }

    /// Modules this instance senses in the layer diagram.
    pub fn sensed(&self) -> Vec<String> {
        self.engine
            .arch
            .senses
            .iter()
            .filter(|s| s.sensing == self.instance)
            .map(|s| s.sensed.clone())
            .collect()
    }

    pub fn query(&self, instance: &str) -> Result<ReflectionView> {
        self.engine.reflect_query(instance)
    }

    /// Body of another instance's model, read through reflection.
    pub fn reflected_model(&self, instance: &str, slot: &str) -> Result<Value> {
        let id = self
            .engine
            .slot_model(instance, slot)
            .ok_or_else(|| EngineError::ModelMissing(format!("slot `{slot}` of `{instance}` has no model")))?;
        Ok(self.engine.store.get(id).map(|m| m.body.clone()).unwrap_or(Value::Null))
    }

    pub fn edit(&mut self, instance: &str, edit: Edit) -> Result<()> {
        self.engine.reflect_edit(instance, edit)
    }

    pub fn emit(&mut self, event: Event) {
        self.engine.on_event(event);
    }

    /// Error for an operation that cannot complete.
    pub fn fail(&self, message: impl Into<String>) -> EngineError {
        EngineError::OperationFailed {
            instance: self.instance.clone(),
            op: self.op.name.clone(),
            message: message.into(),
        }
    }
}
