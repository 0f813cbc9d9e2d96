//! Walking the control flow of a megamodel instance.

use super::call::{OpCall, SoftwareModule};
use super::engine::{Deferred, Engine, Frame};
use super::trace::{RunResult, TraceKind};
use crate::condition::{eval_condition, OpExecution};
use crate::error::{EngineError, Result};
use crate::metamodel::{signature_of, Element, Endpoint, Guard, Operation, UsageKind};
use crate::runtime::instance::OpBinding;
use crate::trigger::{match_interception, InterceptionPoint};
use serde_json::json;
use std::collections::BTreeMap;
use std::sync::Arc;

impl Engine {
    /// A top-level run: collects the trace and handles destruction.
    pub(crate) fn run_top(&mut self, instance: &str, initial_state: &str) -> Result<RunResult> {
        self.trace_buf.clear();
        let start_time = self.now();
        let outcome = self.run_instance(instance, initial_state, BTreeMap::new(), false);
        let trace = std::mem::take(&mut self.trace_buf);
        let final_state = outcome?;
        let destructed = self
            .deferred
            .iter()
            .any(|d| matches!(d, Deferred::Destroy(n) if n == instance));
        Ok(RunResult {
            instance: instance.to_string(),
            initial_state: initial_state.to_string(),
            final_state,
            destructed,
            start_time,
            end_time: self.now(),
            trace,
        })
    }

    /// Runs an instance synchronously to a final state; returns that state.
    pub(crate) fn run_instance(
        &mut self,
        name: &str,
        initial: &str,
        aliases: BTreeMap<String, (String, String)>,
        interception: bool,
    ) -> Result<String> {
        if self.frames.iter().any(|f| f.instance == name) {
            return Err(EngineError::Reentry(name.to_string()));
        }
        let now = self.now();
        let inst = self
            .instances
            .get_mut(name)
            .ok_or_else(|| EngineError::NoInstance(name.to_string()))?;
        if inst.is_running() {
            return Err(EngineError::Reentry(name.to_string()));
        }
        if !inst.megamodel.state(initial).is_some_and(|s| s.is_initial()) {
            return Err(EngineError::StateUnknown {
                instance: name.to_string(),
                state: initial.to_string(),
            });
        }
        inst.history.begin_run(initial, now);
        self.frames.push(Frame {
            instance: name.to_string(),
            aliases,
            interception,
        });
        self.trace(name, TraceKind::EnterState, initial, None);
        let outcome = self.walk(name, initial);
        self.frames.pop();
        let now = self.now();
        let inst = self.instances.get_mut(name).expect("instances are removed only at quiescence");
        match outcome {
            Ok(final_state) => {
                inst.history.finish_run(&final_state, now);
                let destruction = inst.megamodel.state(&final_state).is_some_and(|s| s.destruction);
                self.trace(name, TraceKind::EnterState, &final_state, None);
                if destruction {
                    self.deferred.push(Deferred::Destroy(name.to_string()));
                }
                Ok(final_state)
            }
            Err(e) => {
                inst.history.abort_run(now);
                self.trace(name, TraceKind::Error, e.code(), Some(e.to_string()));
                Err(e)
            }
        }
    }

    fn walk(&mut self, name: &str, initial: &str) -> Result<String> {
        let mut from = Endpoint::element(initial);
        loop {
            // Re-read the live megamodel: interception may have edited conditions.
            let mm = self.instances[name].megamodel.clone();
            let mut target = mm
                .flows_from(&from.element, from.compartment.as_deref())
                .next()
                .map(|f| f.target.clone())
                .ok_or_else(|| EngineError::FlowBroken(format!("no flow leaves `{from}` in `{}`", mm.name)))?;
            loop {
                match mm.element(&target.element) {
                    Some(Element::State(s)) if s.is_final() => return Ok(s.name.clone()),
                    Some(Element::Decision(d)) => {
                        let now = self.now();
                        let history = &self.instances[name].history;
                        let branch = d
                            .branches
                            .iter()
                            .find(|b| match &b.guard {
                                Guard::When(c) => eval_condition(c, history, now),
                                Guard::Else => true,
                            })
                            .ok_or_else(|| EngineError::FlowBroken(format!("decision `{}` has no else", d.name)))?;
                        let next = branch.target.clone();
                        self.trace(name, TraceKind::Decision, &d.name, Some(next.to_string()));
                        target = next;
                    }
                    Some(Element::Operation(op)) => {
                        let exit = self.exec_op(name, op, target.compartment.clone())?;
                        from = Endpoint::compartment(&op.name, &exit);
                        break;
                    }
                    _ => {
                        return Err(EngineError::FlowBroken(format!(
                            "`{target}` is not a valid flow target in `{}`",
                            mm.name
                        )))
                    }
                }
            }
        }
    }

    fn exec_op(&mut self, name: &str, op: &Operation, entry: Option<String>) -> Result<String> {
        self.intercept(InterceptionPoint::Before, &op.name);
        let start = self.now();
        self.trace(name, TraceKind::OpStart, &op.name, entry.clone());
        let binding = self.instances[name]
            .bindings
            .get(&op.name)
            .ok_or_else(|| EngineError::BindMissing(format!("operation `{}` of `{name}` is not bound", op.name)))?;
        let exit = match binding {
            OpBinding::Software(key) => {
                let module = self
                    .software
                    .get(key)
                    .cloned()
                    .ok_or_else(|| EngineError::BindMissing(format!("no software module registered as `{key}`")))?;
                self.dispatch_basic(name, op, module)?
            }
            OpBinding::Module(target) => {
                let target = target.clone();
                self.invoke_complex(name, op, &target, entry)?
            }
        };
        let end = self.now();
        if let Some(inst) = self.instances.get_mut(name) {
            inst.history.record_op(OpExecution {
                op: op.name.clone(),
                exit: exit.clone(),
                start_time: start,
                end_time: end,
            });
        }
        self.trace(name, TraceKind::OpEnd, &op.name, Some(exit.clone()));
        self.intercept(InterceptionPoint::After, &op.name);
        Ok(exit)
    }

    /// Maps the entry compartment to the callee's initial state, runs it and
    /// maps its final state back to an exit compartment by name.
    fn invoke_complex(&mut self, name: &str, op: &Operation, target: &str, entry: Option<String>) -> Result<String> {
        let callee = self
            .instances
            .get(target)
            .ok_or_else(|| EngineError::NoInstance(target.to_string()))?
            .megamodel
            .clone();
        let entry_state = match entry {
            Some(e) => e,
            None => {
                let sig = signature_of(&callee);
                if !sig.single_entry() {
                    return Err(EngineError::StateUnknown {
                        instance: target.to_string(),
                        state: format!("<implicit entry of {}>", op.name),
                    });
                }
                sig.entries.into_iter().next().unwrap_or_default()
            }
        };
        let aliases = op
            .usages
            .iter()
            .map(|u| {
                let (owner, slot) = self.resolve_slot(name, &u.slot);
                (u.slot.clone(), (owner.to_string(), slot.to_string()))
            })
            .collect();
        let final_state = self.run_instance(target, &entry_state, aliases, false)?;
        route_complex(&final_state, op).ok_or_else(|| EngineError::ExitUnknown {
            instance: name.to_string(),
            op: op.name.clone(),
            exit: final_state,
        })
    }

    fn dispatch_basic(&mut self, name: &str, op: &Operation, module: Arc<dyn SoftwareModule>) -> Result<String> {
        for u in &op.usages {
            let (owner, slot) = self.resolve_slot(name, &u.slot);
            let decl = self.instances[owner].megamodel.slot(slot);
            if decl.is_some_and(|s| s.megamodel_ref) {
                continue;
            }
            if u.kind == UsageKind::Create {
                let stereotype = decl.and_then(|s| s.stereotype);
                let (owner, slot) = (owner.to_string(), slot.to_string());
                let id = self.store.create(&slot, stereotype, json!({}));
                if let Some(old) = self.instances.get_mut(&owner).and_then(|i| i.models.insert(slot, id)) {
                    self.store.remove(old);
                }
            } else if !self.slot_model(name, &u.slot).is_some_and(|id| self.store.contains(id)) {
                return Err(EngineError::ModelMissing(format!(
                    "`{}` of `{name}` {} `{}`, which has no model",
                    op.name,
                    u.kind.keyword(),
                    u.slot
                )));
            }
        }
        let exit = {
            let mut call = OpCall {
                engine: self,
                instance: name.to_string(),
                op,
            };
            module.invoke(&mut call)?
        };
        if !op.has_exit(&exit) {
            return Err(EngineError::ExitUnknown {
                instance: name.to_string(),
                op: op.name.clone(),
                exit,
            });
        }
        for u in op.usages.iter().filter(|u| u.kind == UsageKind::Destroy) {
            let (owner, slot) = self.resolve_slot(name, &u.slot);
            let (owner, slot) = (owner.to_string(), slot.to_string());
            if let Some(id) = self.instances.get_mut(&owner).and_then(|i| i.models.remove(&slot)) {
                self.store.remove(id);
            }
        }
        Ok(exit)
    }

    /// Synchronously runs every module whose trigger intercepts `op` here.
    fn intercept(&mut self, point: InterceptionPoint, op: &str) {
        if !self.arch.senses.iter().any(|s| s.trigger.as_ref().is_some_and(|t| t.has_interception())) {
            return;
        }
        let chain: Vec<&str> = self.frames.iter().map(|f| f.instance.as_str()).collect();
        let mut hits: Vec<(u32, String, String, u64)> = self
            .arch
            .senses
            .iter()
            .filter_map(|s| {
                let spec = s.trigger.as_ref()?;
                if !spec.has_interception()
                    || chain.contains(&s.sensing.as_str())
                    || !self.instances.contains_key(&s.sensing)
                    || !match_interception(spec, s, point, op, &chain)
                {
                    return None;
                }
                Some((
                    self.arch.layer_of(&s.sensing).unwrap_or(0),
                    s.sensing.clone(),
                    spec.initial_state.clone(),
                    spec.period_micros.unwrap_or(0),
                ))
            })
            .collect();
        if hits.is_empty() {
            return;
        }
        hits.sort();
        hits.dedup_by(|a, b| a.1 == b.1);
        for (_, sensing, initial, period) in hits {
            let now = self.now();
            let inst = &self.instances[&sensing];
            if inst.is_running() || !self.scheduler.gate_open(period, inst.last_run(), now) {
                continue;
            }
            if let Err(e) = self.run_instance(&sensing, &initial, BTreeMap::new(), true) {
                self.note_error(e);
            }
        }
    }
}

/// Exit compartment for a callee's final state (identity by name).
pub fn route_complex(final_state: &str, op: &Operation) -> Option<String> {
    op.has_exit(final_state).then(|| final_state.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metamodel::OperationKind;

    #[test]
    fn routing_is_identity_on_declared_exits() {
        let mut op = Operation::basic("Repair", &["Analyzed", "Executed"]);
        op.kind = OperationKind::Complex;
        assert_eq!(route_complex("Analyzed", &op).as_deref(), Some("Analyzed"));
        assert_eq!(route_complex("Executed", &op).as_deref(), Some("Executed"));
        assert_eq!(route_complex("Planned", &op), None);
    }
}
