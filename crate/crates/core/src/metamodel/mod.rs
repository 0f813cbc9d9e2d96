//! Feedback loop diagrams, layer diagrams and their well-formedness rules.

mod architecture;
mod check;
mod events;
mod megamodel;

pub use architecture::{
    ArchitectureDecl, EdgeMode, EdgeRef, EffectEdge, Layer, ModelBinding, ModuleDecl, ModuleKind,
    SenseEdge, UseEdge,
};
pub use check::{
    check_architecture, check_architecture_structure, check_megamodel, check_use_edge,
    is_identifier, signature_compatible, Registry,
};
pub use events::{Event, EventTypes};
pub use megamodel::{
    mape_label, signature_of, Activity, Branch, ControlState, DecisionNode, Element, Endpoint,
    FlowEdge, Guard, Megamodel, ModelSlot, ModelStereotype, ModelUsage, Operation, OperationKind,
    Signature, StateKind, UsageKind,
};
