//! All-or-nothing application of patches and rebindings at quiescence.

use super::patch::{MegamodelSource, Patch, PatchStep};
use crate::diag::has_errors;
use crate::error::{EngineError, Result};
use crate::metamodel::{
    check_megamodel, check_use_edge, ArchitectureDecl, EdgeRef, EffectEdge, Layer, ModelBinding, ModuleDecl,
    ModuleKind, Registry, SenseEdge, UseEdge,
};
use crate::runtime::Engine;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchReport {
    pub name: String,
    pub steps: usize,
    pub added_modules: Vec<String>,
    pub removed_modules: Vec<String>,
}

fn resolve(msg: String) -> EngineError {
    EngineError::PatchResolve(msg)
}

fn need_module(a: &ArchitectureDecl, name: &str) -> Result<()> {
    a.module(name)
        .map(|_| ())
        .ok_or_else(|| resolve(format!("no module `{name}`")))
}

impl Engine {
    /// Applies a patch to copies of the layer diagram and registry, validates
    /// the result and only then swaps it in.
    pub fn apply_patch(&mut self, patch: &Patch) -> Result<PatchReport> {
        if !self.is_quiescent() {
            return Err(EngineError::Reentry("engine".into()));
        }
        let mut arch = self.arch.clone();
        let mut registry = self.registry.clone();
        for step in &patch.steps {
            self.apply_step(&mut arch, &mut registry, step)?;
        }
        let before: Vec<String> = self.arch.modules.iter().map(|m| m.instance.clone()).collect();
        let after: Vec<String> = arch.modules.iter().map(|m| m.instance.clone()).collect();
        let diags = self.validate(&arch, &registry);
        if !diags.is_empty() {
            return Err(EngineError::PatchInvalid(diags));
        }
        self.swap_in(arch, registry, format!("patch {}", patch.name));
        Ok(PatchReport {
            name: patch.name.clone(),
            steps: patch.steps.len(),
            added_modules: after.iter().filter(|m| !before.contains(m)).cloned().collect(),
            removed_modules: before.into_iter().filter(|m| !after.contains(m)).collect(),
        })
    }

    fn apply_step(&self, a: &mut ArchitectureDecl, registry: &mut Registry, step: &PatchStep) -> Result<()> {
        match step {
            PatchStep::LoadMegamodel(MegamodelSource::Inline(m)) => {
                let diags = check_megamodel(m);
                if has_errors(&diags) {
                    return Err(EngineError::PatchInvalid(diags));
                }
                registry.insert(m.name.clone(), Arc::new(m.clone()));
            }
            PatchStep::LoadMegamodel(MegamodelSource::Path(p)) => {
                return Err(resolve(format!("megamodel source `{p}` was not resolved")));
            }
            PatchStep::UnloadMegamodel(name) => {
                registry
                    .remove(name)
                    .ok_or_else(|| resolve(format!("no megamodel `{name}` loaded")))?;
            }
            PatchStep::AddLayer { index, name } => a.insert_layer(Layer {
                index: *index,
                name: name.clone(),
            }),
            PatchStep::RemoveLayer(index) => {
                let at = a
                    .layers
                    .iter()
                    .position(|l| l.index == *index)
                    .ok_or_else(|| resolve(format!("no layer {index}")))?;
                a.layers.remove(at);
            }
            PatchStep::AddModule { layer, instance, megamodel } => {
                if !registry.contains_key(megamodel) {
                    return Err(resolve(format!("no megamodel `{megamodel}` loaded")));
                }
                a.insert_module(ModuleDecl {
                    instance: instance.clone(),
                    kind: ModuleKind::Megamodel,
                    source_ref: megamodel.clone(),
                    layer: *layer,
                });
            }
            PatchStep::AddSoftware { layer, instance, key } => a.insert_module(ModuleDecl {
                instance: instance.clone(),
                kind: ModuleKind::Software,
                source_ref: key.clone(),
                layer: *layer,
            }),
            PatchStep::RemoveModule(name) => {
                a.remove_module(name)
                    .ok_or_else(|| resolve(format!("no module `{name}`")))?;
            }
            PatchStep::AddSense { sensing, sensed, mode, trigger } => {
                need_module(a, sensing)?;
                need_module(a, sensed)?;
                a.senses.push(SenseEdge {
                    sensing: sensing.clone(),
                    sensed: sensed.clone(),
                    mode: *mode,
                    trigger: trigger.clone(),
                });
            }
            PatchStep::AddEffect { source, target, mode } => {
                need_module(a, source)?;
                need_module(a, target)?;
                a.effects.push(EffectEdge {
                    source: source.clone(),
                    target: target.clone(),
                    mode: *mode,
                });
            }
            PatchStep::RemoveEdge(edge) => {
                if !a.remove_edge(edge) {
                    return Err(resolve(format!("no edge `{edge}`")));
                }
            }
            PatchStep::BindUse { module, op, target } => {
                need_module(a, module)?;
                if a.module(target).is_none() && !self.has_software(target) {
                    return Err(resolve(format!("`{target}` is neither a module nor a software key")));
                }
                match a.uses.iter_mut().find(|u| &u.module == module && &u.op == op) {
                    Some(u) => u.target = target.clone(),
                    None => a.uses.push(UseEdge {
                        module: module.clone(),
                        op: op.clone(),
                        target: target.clone(),
                    }),
                }
            }
            PatchStep::BindModel { module, slot, target } => {
                need_module(a, module)?;
                need_module(a, target)?;
                match a.model_bindings.iter_mut().find(|b| &b.module == module && &b.slot == slot) {
                    Some(b) => b.target = target.clone(),
                    None => a.model_bindings.push(ModelBinding {
                        module: module.clone(),
                        slot: slot.clone(),
                        target: target.clone(),
                    }),
                }
            }
            PatchStep::SetTrigger { sensing, sensed, trigger } => {
                let edge = a
                    .senses
                    .iter_mut()
                    .find(|s| &s.sensing == sensing && &s.sensed == sensed)
                    .ok_or_else(|| resolve(format!("no sense edge {sensing} <- {sensed}")))?;
                edge.trigger = trigger.clone();
            }
        }
        Ok(())
    }

    /// Re-targets one use edge after checking only that edge.
    pub fn rebind_use(&mut self, module: &str, op: &str, target: &str) -> Result<()> {
        if !self.is_quiescent() {
            return Err(EngineError::Reentry(module.to_string()));
        }
        if !self.instances.contains_key(module) {
            return Err(EngineError::NoInstance(module.to_string()));
        }
        let edge = UseEdge {
            module: module.to_string(),
            op: op.to_string(),
            target: target.to_string(),
        };
        let mut arch = self.arch.clone();
        arch.remove_edge(&EdgeRef::Use {
            module: module.to_string(),
            op: op.to_string(),
        });
        if let Some((code, msg)) = check_use_edge(&arch, &self.registry, &edge).into_iter().next() {
            return Err(if code == "E-SIG-MISMATCH" {
                EngineError::SigMismatch(msg)
            } else {
                EngineError::EditInvalid(format!("{code}: {msg}"))
            });
        }
        if arch.module(target).is_none() && !self.has_software(target) {
            return Err(EngineError::BindMissing(format!("no software module registered as `{target}`")));
        }
        match self.arch.uses.iter().position(|u| u.module == module && u.op == op) {
            Some(i) => arch.uses.insert(i, edge),
            None => arch.uses.push(edge),
        }
        self.swap_in(arch, self.registry.clone(), format!("rebind {module}.{op} -> {target}"));
        Ok(())
    }

    /// Validated replacement of the layer diagram.
    pub(crate) fn commit(&mut self, arch: ArchitectureDecl, registry: Registry, what: String) -> Result<()> {
        let diags = self.validate(&arch, &registry);
        if !diags.is_empty() {
            return Err(EngineError::PatchInvalid(diags));
        }
        self.swap_in(arch, registry, what);
        Ok(())
    }

    fn swap_in(&mut self, arch: ArchitectureDecl, registry: Registry, what: String) {
        self.arch = arch;
        self.registry = registry;
        self.sync_instances();
        self.record_mutation(what, true, false);
    }
}
