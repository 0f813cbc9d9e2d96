//! Integration rules: ordered, name-resolved structural change steps.

use crate::metamodel::{EdgeMode, EdgeRef, Megamodel};
use crate::trigger::TriggerSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum MegamodelSource {
    /// Path relative to the patch file, resolved before application.
    Path(String),
    Inline(Megamodel),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatchStep {
    LoadMegamodel(MegamodelSource),
    UnloadMegamodel(String),
    AddLayer { index: u32, name: String },
    RemoveLayer(u32),
    AddModule { layer: u32, instance: String, megamodel: String },
    AddSoftware { layer: u32, instance: String, key: String },
    RemoveModule(String),
    AddSense { sensing: String, sensed: String, mode: EdgeMode, trigger: Option<TriggerSpec> },
    AddEffect { source: String, target: String, mode: EdgeMode },
    RemoveEdge(EdgeRef),
    BindUse { module: String, op: String, target: String },
    BindModel { module: String, slot: String, target: String },
    SetTrigger { sensing: String, sensed: String, trigger: Option<TriggerSpec> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Patch {
    pub name: String,
    pub steps: Vec<PatchStep>,
}

impl Patch {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            steps: Vec::new(),
        }
    }

    pub fn step(mut self, step: PatchStep) -> Self {
        self.steps.push(step);
        self
    }
}
