//! Layer diagrams: layers, module instances and the edges between them.

use crate::diag::SourceMap;
use crate::trigger::TriggerSpec;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub index: u32,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModuleKind {
    Megamodel,
    Software,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDecl {
    pub instance: String,
    pub kind: ModuleKind,
    /// Megamodel name or software registration key.
    pub source_ref: String,
    pub layer: u32,
}

/// Binds an operation of a megamodel module to a module or a software key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseEdge {
    pub module: String,
    pub op: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeMode {
    Read,
    Write,
    Annotate,
}

impl EdgeMode {
    pub fn letter(self) -> char {
        match self {
            Self::Read => 'r',
            Self::Write => 'w',
            Self::Annotate => 'a',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "r" => Some(Self::Read),
            "w" => Some(Self::Write),
            "a" => Some(Self::Annotate),
            _ => None,
        }
    }
}

/// `sensing` observes `sensed`; the trigger decides when `sensing` runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseEdge {
    pub sensing: String,
    pub sensed: String,
    pub mode: EdgeMode,
    pub trigger: Option<TriggerSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectEdge {
    pub source: String,
    pub target: String,
    pub mode: EdgeMode,
}

/// Binds a megamodel-ref slot to a live module instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelBinding {
    pub module: String,
    pub slot: String,
    pub target: String,
}

/// Reference to a single edge, used by patches and the control channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeRef {
    Use { module: String, op: String },
    Sense { sensing: String, sensed: String },
    Effect { source: String, target: String },
    BindModel { module: String, slot: String },
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Use { module, op } => write!(f, "use {module}.{op}"),
            Self::Sense { sensing, sensed } => write!(f, "sense {sensing} <- {sensed}"),
            Self::Effect { source, target } => write!(f, "effect {source} -> {target}"),
            Self::BindModel { module, slot } => write!(f, "bind-model {module}.{slot}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArchitectureDecl {
    pub name: String,
    pub layers: Vec<Layer>,
    pub modules: Vec<ModuleDecl>,
    pub uses: Vec<UseEdge>,
    pub senses: Vec<SenseEdge>,
    pub effects: Vec<EffectEdge>,
    pub model_bindings: Vec<ModelBinding>,
    pub source: SourceMap,
}

impl ArchitectureDecl {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn layer(&self, index: u32) -> Option<&Layer> {
        self.layers.iter().find(|l| l.index == index)
    }

    pub fn module(&self, instance: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.instance == instance)
    }

    pub fn layer_of(&self, instance: &str) -> Option<u32> {
        self.module(instance).map(|m| m.layer)
    }

    pub fn megamodel_modules(&self) -> impl Iterator<Item = &ModuleDecl> {
        self.modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Megamodel)
    }

    pub fn use_edge(&self, module: &str, op: &str) -> Option<&UseEdge> {
        self.uses.iter().find(|u| u.module == module && u.op == op)
    }

    pub fn sense_edge(&self, sensing: &str, sensed: &str) -> Option<&SenseEdge> {
        self.senses
            .iter()
            .find(|s| s.sensing == sensing && s.sensed == sensed)
    }

    pub fn model_binding(&self, module: &str, slot: &str) -> Option<&ModelBinding> {
        self.model_bindings
            .iter()
            .find(|b| b.module == module && b.slot == slot)
    }

    /// Inserts a layer keeping layers sorted by index.
    pub fn insert_layer(&mut self, layer: Layer) {
        let at = self
            .layers
            .iter()
            .position(|l| l.index > layer.index)
            .unwrap_or(self.layers.len());
        self.layers.insert(at, layer);
    }

    /// Inserts a module after the last module of its layer or any lower layer,
    /// so the module list stays grouped by layer as in the textual form.
    pub fn insert_module(&mut self, module: ModuleDecl) {
        let rank = |m: &ModuleDecl| {
            self.layers
                .iter()
                .position(|l| l.index == m.layer)
                .unwrap_or(usize::MAX)
        };
        let own = rank(&module);
        let at = self
            .modules
            .iter()
            .rposition(|m| rank(m) <= own)
            .map_or(0, |i| i + 1);
        self.modules.insert(at, module);
    }

    /// Removes a module together with every edge touching it.
    pub fn remove_module(&mut self, instance: &str) -> Option<ModuleDecl> {
        let idx = self.modules.iter().position(|m| m.instance == instance)?;
        let module = self.modules.remove(idx);
        self.uses
            .retain(|u| u.module != instance && u.target != instance);
        self.senses
            .retain(|s| s.sensing != instance && s.sensed != instance);
        self.effects
            .retain(|e| e.source != instance && e.target != instance);
        self.model_bindings
            .retain(|b| b.module != instance && b.target != instance);
        Some(module)
    }

    pub fn remove_edge(&mut self, edge: &EdgeRef) -> bool {
        let before = self.edge_count();
        match edge {
            EdgeRef::Use { module, op } => self.uses.retain(|u| !(&u.module == module && &u.op == op)),
            EdgeRef::Sense { sensing, sensed } => self
                .senses
                .retain(|s| !(&s.sensing == sensing && &s.sensed == sensed)),
            EdgeRef::Effect { source, target } => self
                .effects
                .retain(|e| !(&e.source == source && &e.target == target)),
            EdgeRef::BindModel { module, slot } => self
                .model_bindings
                .retain(|b| !(&b.module == module && &b.slot == slot)),
        }
        self.edge_count() != before
    }

    fn edge_count(&self) -> usize {
        self.uses.len() + self.senses.len() + self.effects.len() + self.model_bindings.len()
    }
}
