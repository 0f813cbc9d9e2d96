use crate::diag::Diagnostic;
use thiserror::Error;

/// Runtime errors raised by the engine, each carrying a stable code.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("E-BIND-MISSING: {0}")]
    BindMissing(String),
    #[error("E-NAME-DUP: instance `{0}` already registered")]
    NameDup(String),
    #[error("E-EXIT-UNKNOWN: operation `{op}` of `{instance}` returned undeclared exit `{exit}`")]
    ExitUnknown {
        instance: String,
        op: String,
        exit: String,
    },
    #[error("E-REENTRY: instance `{0}` is already running")]
    Reentry(String),
    #[error("E-STATE-UNKNOWN: `{state}` is not an initial state of `{instance}`")]
    StateUnknown { instance: String, state: String },
    #[error("E-FLOW-BROKEN: {0}")]
    FlowBroken(String),
    #[error("E-MODEL-MISSING: {0}")]
    ModelMissing(String),
    #[error("E-MODEL-ACCESS: {0}")]
    ModelAccess(String),
    #[error("E-OP-FAILED: operation `{op}` of `{instance}` failed: {message}")]
    OperationFailed {
        instance: String,
        op: String,
        message: String,
    },
    #[error("E-SIG-MISMATCH: {0}")]
    SigMismatch(String),
    #[error("E-NO-INSTANCE: {0}")]
    NoInstance(String),
    #[error("E-EDIT-INVALID: {0}")]
    EditInvalid(String),
    #[error("E-PATCH-RESOLVE: {0}")]
    PatchResolve(String),
    #[error("E-PATCH-INVALID: {}", summarize(.0))]
    PatchInvalid(Vec<Diagnostic>),
    #[error("E-SNAP-PARSE: {0}")]
    SnapParse(String),
    #[error("E-NO-COMPONENT: {0}")]
    NoComponent(String),
    #[error("E-COMPONENT-STATE: {0}")]
    ComponentState(String),
    #[error("E-LOAD: {}", summarize(.0))]
    Load(Vec<Diagnostic>),
    #[error("E-IO: {0}")]
    Io(String),
    #[error("E-BENCH-INFEASIBLE: {0}")]
    BenchInfeasible(String),
    #[error("E-NO-ENVIRONMENT: no adaptable-software environment attached")]
    NoEnvironment,
    #[error("E-CONTROL: {0}")]
    Control(String),
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::BindMissing(_) => "E-BIND-MISSING",
            Self::NameDup(_) => "E-NAME-DUP",
            Self::ExitUnknown { .. } => "E-EXIT-UNKNOWN",
            Self::Reentry(_) => "E-REENTRY",
            Self::StateUnknown { .. } => "E-STATE-UNKNOWN",
            Self::FlowBroken(_) => "E-FLOW-BROKEN",
            Self::ModelMissing(_) => "E-MODEL-MISSING",
            Self::ModelAccess(_) => "E-MODEL-ACCESS",
            Self::OperationFailed { .. } => "E-OP-FAILED",
            Self::SigMismatch(_) => "E-SIG-MISMATCH",
            Self::NoInstance(_) => "E-NO-INSTANCE",
            Self::EditInvalid(_) => "E-EDIT-INVALID",
            Self::PatchResolve(_) => "E-PATCH-RESOLVE",
            Self::PatchInvalid(_) => "E-PATCH-INVALID",
            Self::SnapParse(_) => "E-SNAP-PARSE",
            Self::NoComponent(_) => "E-NO-COMPONENT",
            Self::ComponentState(_) => "E-COMPONENT-STATE",
            Self::Load(_) => "E-LOAD",
            Self::Io(_) => "E-IO",
            Self::BenchInfeasible(_) => "E-BENCH-INFEASIBLE",
            Self::NoEnvironment => "E-NO-ENVIRONMENT",
            Self::Control(_) => "E-CONTROL",
        }
    }
}

impl From<std::io::Error> for EngineError {
    fn from(err: std::io::Error) -> Self {
        Self::Io(err.to_string())
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
