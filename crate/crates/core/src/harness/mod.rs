//! A mock adaptable system with software modules for every fixture operation.

mod environment;
mod modules;
mod scenario;
mod script;
mod system;

pub use environment::SystemEnvironment;
pub use modules::{
    default_model, lock, missing_kinds, mirror, register_modules, synthesized_action, SharedSystem, OP_COST,
    SOFTWARE_KEYS,
};
pub use scenario::{Scenario, ScriptOutcome};
pub use script::{Script, ScriptCommand};
pub use system::{Component, Lifecycle, SystemState, FAILURE_KINDS, SOFTWARE_MODULE};
