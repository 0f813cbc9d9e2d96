//! Procedural reflection: querying and editing live module instances.

use crate::condition::parse_condition;
use crate::diag::has_errors;
use crate::dsl::serialize_fld;
use crate::error::{EngineError, Result};
use crate::metamodel::{check_megamodel, check_use_edge, mape_label, Guard, UseEdge};
use crate::runtime::{Deferred, Engine};
use crate::trigger::TriggerSpec;
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    /// Replaces the body of a model, keeping its identity.
    ReplaceModel { slot: String, body: Value },
    SetDecisionCondition { decision: String, branch: usize, condition: String },
    Rebind { op: String, target: String },
    /// Trigger of the edge by which the edited instance senses `sensed`.
    SetTrigger { sensed: String, trigger: Option<TriggerSpec> },
}

impl Edit {
    /// Structural edits change the layer diagram and are always quiescent.
    pub fn is_structural(&self) -> bool {
        matches!(self, Self::Rebind { .. } | Self::SetTrigger { .. })
    }

    fn describe(&self, instance: &str) -> String {
        match self {
            Self::ReplaceModel { slot, .. } => format!("replace-model {instance}.{slot}"),
            Self::SetDecisionCondition { decision, branch, condition } => {
                format!("set-condition {instance}.{decision}[{branch}] {condition}")
            }
            Self::Rebind { op, target } => format!("rebind {instance}.{op} -> {target}"),
            Self::SetTrigger { sensed, trigger } => format!(
                "set-trigger {instance} <- {sensed} {}",
                trigger.as_ref().map_or("none".to_string(), ToString::to_string)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlotView {
    pub model_id: Option<u64>,
    pub model_name: Option<String>,
    pub revision: Option<u64>,
    /// Bound module instance for megamodel-ref slots.
    pub instance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExitCount {
    pub op: String,
    pub exit: String,
    pub count: u64,
}

/// Read-only copy of an instance's structure, bindings and history summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReflectionView {
    pub instance: String,
    pub megamodel: String,
    pub mape_label: String,
    pub layer: Option<u32>,
    pub customized: bool,
    pub running: bool,
    pub fld: String,
    pub op_bindings: BTreeMap<String, String>,
    pub model_bindings: BTreeMap<String, SlotView>,
    pub run_count: u64,
    pub last_final_state: Option<String>,
    pub last_exits: Vec<(String, String)>,
    pub exit_counts: Vec<ExitCount>,
}

impl Engine {
    pub fn reflect_query(&self, instance: &str) -> Result<ReflectionView> {
        let inst = self
            .instances
            .get(instance)
            .ok_or_else(|| EngineError::NoInstance(instance.to_string()))?;
        let mm = &inst.megamodel;
        let model_bindings = mm
            .models
            .iter()
            .map(|slot| {
                let view = if slot.megamodel_ref {
                    SlotView {
                        model_id: None,
                        model_name: None,
                        revision: None,
                        instance: self.arch.model_binding(instance, &slot.name).map(|b| b.target.clone()),
                    }
                } else {
                    let model = inst.models.get(&slot.name).and_then(|id| self.store.get(*id));
                    SlotView {
                        model_id: model.map(|m| m.id),
                        model_name: model.map(|m| m.name.clone()),
                        revision: model.map(|m| m.revision),
                        instance: None,
                    }
                };
                (slot.name.clone(), view)
            })
            .collect();
        let last = inst.history.last_run();
        Ok(ReflectionView {
            instance: instance.to_string(),
            megamodel: mm.name.clone(),
            mape_label: mape_label(mm),
            layer: self.arch.layer_of(instance),
            customized: inst.customized,
            running: inst.is_running(),
            fld: serialize_fld(mm),
            op_bindings: self
                .arch
                .uses
                .iter()
                .filter(|u| u.module == instance)
                .map(|u| (u.op.clone(), u.target.clone()))
                .collect(),
            model_bindings,
            run_count: inst.history.run_count(),
            last_final_state: last.map(|r| r.final_state.clone()),
            last_exits: last.map_or_else(Vec::new, |r| {
                r.op_executions.iter().map(|x| (x.op.clone(), x.exit.clone())).collect()
            }),
            exit_counts: inst
                .history
                .exit_counts()
                .into_iter()
                .map(|(op, exit, count)| ExitCount { op, exit, count })
                .collect(),
        })
    }

    /// Validates an edit and applies it now or at the next quiescent point.
    ///
    /// Model replacement and condition changes take effect immediately when the
    /// caller runs inside an intercepting frame; structural edits always wait.
    pub fn reflect_edit(&mut self, instance: &str, edit: Edit) -> Result<()> {
        self.validate_edit(instance, &edit)?;
        if self.is_quiescent() {
            return self.apply_edit(instance, edit, false);
        }
        let intercepting = self.frames.iter().any(|f| f.interception);
        if intercepting && !edit.is_structural() {
            return self.apply_edit(instance, edit, true);
        }
        self.deferred.push(Deferred::Edit {
            instance: instance.to_string(),
            edit,
        });
        Ok(())
    }

    fn validate_edit(&self, instance: &str, edit: &Edit) -> Result<()> {
        let inst = self
            .instances
            .get(instance)
            .ok_or_else(|| EngineError::NoInstance(instance.to_string()))?;
        let invalid = |msg: String| Err(EngineError::EditInvalid(msg));
        match edit {
            Edit::ReplaceModel { slot, .. } => match inst.megamodel.slot(slot) {
                None => invalid(format!("`{instance}` has no model slot `{slot}`")),
                Some(s) if s.megamodel_ref => invalid(format!("`{slot}` is a megamodel-ref slot")),
                Some(_) if !inst.models.contains_key(slot) => invalid(format!("`{slot}` holds no model yet")),
                Some(_) => Ok(()),
            },
            Edit::SetDecisionCondition { decision, branch, condition } => {
                self.edited_megamodel(instance, decision, *branch, condition).map(|_| ())
            }
            Edit::Rebind { op, target } => {
                let mut arch = self.arch.clone();
                arch.uses.retain(|u| !(u.module == instance && &u.op == op));
                let edge = UseEdge {
                    module: instance.to_string(),
                    op: op.clone(),
                    target: target.clone(),
                };
                if let Some((_, msg)) = check_use_edge(&arch, &self.registry, &edge).into_iter().next() {
                    return invalid(msg);
                }
                Ok(())
            }
            Edit::SetTrigger { sensed, trigger } => {
                if self.arch.sense_edge(instance, sensed).is_none() {
                    return invalid(format!("`{instance}` does not sense `{sensed}`"));
                }
                let mut arch = self.arch.clone();
                if let Some(s) = arch.senses.iter_mut().find(|s| s.sensing == instance && &s.sensed == sensed) {
                    s.trigger = trigger.clone();
                }
                let diags = self.validate(&arch, &self.registry);
                match diags.first() {
                    Some(d) => invalid(d.to_string()),
                    None => Ok(()),
                }
            }
        }
    }

    fn edited_megamodel(
        &self,
        instance: &str,
        decision: &str,
        branch: usize,
        condition: &str,
    ) -> Result<crate::metamodel::Megamodel> {
        let inst = self
            .instances
            .get(instance)
            .ok_or_else(|| EngineError::NoInstance(instance.to_string()))?;
        let expr = parse_condition(condition).map_err(|e| EngineError::EditInvalid(e.to_string()))?;
        let mut m = (*inst.megamodel).clone();
        let d = m
            .decision_mut(decision)
            .ok_or_else(|| EngineError::EditInvalid(format!("`{instance}` has no decision `{decision}`")))?;
        match d.branches.get_mut(branch) {
            Some(b) if matches!(b.guard, Guard::When(_)) => b.guard = Guard::When(expr),
            Some(_) => return Err(EngineError::EditInvalid("the else branch has no condition".into())),
            None => return Err(EngineError::EditInvalid(format!("decision `{decision}` has no branch {branch}"))),
        }
        let diags = check_megamodel(&m);
        if has_errors(&diags) {
            let msg = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Err(EngineError::EditInvalid(msg));
        }
        Ok(m)
    }

    pub(crate) fn apply_edit(&mut self, instance: &str, edit: Edit, interception: bool) -> Result<()> {
        let what = edit.describe(instance);
        let structural = edit.is_structural();
        match edit {
            Edit::ReplaceModel { slot, body } => {
                let id = self
                    .instances
                    .get(instance)
                    .and_then(|i| i.models.get(&slot).copied())
                    .ok_or_else(|| EngineError::EditInvalid(format!("`{slot}` of `{instance}` holds no model")))?;
                self.store.replace_body(id, body);
            }
            Edit::SetDecisionCondition { decision, branch, condition } => {
                let m = self.edited_megamodel(instance, &decision, branch, &condition)?;
                if let Some(inst) = self.instances.get_mut(instance) {
                    inst.megamodel = Arc::new(m);
                    inst.customized = true;
                }
            }
            Edit::Rebind { op, target } => return self.rebind_use(instance, &op, &target),
            Edit::SetTrigger { sensed, trigger } => {
                let mut arch = self.arch.clone();
                if let Some(s) = arch.senses.iter_mut().find(|s| s.sensing == instance && s.sensed == sensed) {
                    s.trigger = trigger;
                }
                return self.commit(arch, self.registry.clone(), what);
            }
        }
        self.record_mutation(what, structural, interception);
        if self.event_types.contains("ModelChanged") {
            let ev = crate::metamodel::Event::new("ModelChanged", instance, self.now());
            self.on_event(ev);
        }
        Ok(())
    }
}
