//! Execution of megamodel instances: clocks, model store, interpreter and engine loop.

mod call;
pub mod clock;
mod engine;
mod instance;
mod interpret;
mod store;
mod trace;

pub use call::{Environment, OpCall, SoftwareModule};
pub use clock::{Clock, MonotonicClock, VirtualClock};
pub(crate) use engine::Deferred;
pub use engine::{Engine, EngineHandle, Inbound, ModelInitializer, TraceSink};
pub use instance::{ModuleInstance, OpBinding};
pub use interpret::route_complex;
pub use store::{ModelId, ModelStore, RuntimeModel};
pub use trace::{
    op_sequence, Audit, MutationRecord, RunCause, RunInterval, RunResult, Stamp, TraceEntry, TraceKind,
};
