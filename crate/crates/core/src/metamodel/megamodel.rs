//! Feedback loop diagrams: operations, runtime-model slots, control flow.

use crate::condition::ConditionExpr;
use crate::diag::SourceMap;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperationKind {
    Basic,
    Complex,
}

/// MAPE activity stereotype of an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Activity {
    Monitor,
    Analyze,
    Plan,
    Execute,
}

impl Activity {
    pub const ALL: [Activity; 4] = [Self::Monitor, Self::Analyze, Self::Plan, Self::Execute];

    pub fn letter(self) -> char {
        match self {
            Self::Monitor => 'M',
            Self::Analyze => 'A',
            Self::Plan => 'P',
            Self::Execute => 'E',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Monitor => "Monitor",
            Self::Analyze => "Analyze",
            Self::Plan => "Plan",
            Self::Execute => "Execute",
        }
    }
}

impl FromStr for Activity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown activity stereotype `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UsageKind {
    Create,
    Destroy,
    Write,
    Read,
    Annotate,
}

impl UsageKind {
    pub const ALL: [UsageKind; 5] = [
        Self::Create,
        Self::Destroy,
        Self::Write,
        Self::Read,
        Self::Annotate,
    ];

    /// Keyword in the textual syntax (`creates`, `reads`, ...).
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Create => "creates",
            Self::Destroy => "destroys",
            Self::Write => "writes",
            Self::Read => "reads",
            Self::Annotate => "annotates",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    pub fn mutates(self) -> bool {
        matches!(self, Self::Create | Self::Write | Self::Annotate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelUsage {
    pub kind: UsageKind,
    pub slot: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub name: String,
    pub display: Option<String>,
    pub kind: OperationKind,
    pub stereotype: Option<Activity>,
    /// Entry compartments; complex operations only, empty means implicit single entry.
    pub entries: Vec<String>,
    pub exits: Vec<String>,
    pub usages: Vec<ModelUsage>,
}

impl Operation {
    pub fn basic(name: &str, exits: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            display: None,
            kind: OperationKind::Basic,
            stereotype: None,
            entries: Vec::new(),
            exits: exits.iter().map(|s| s.to_string()).collect(),
            usages: Vec::new(),
        }
    }

    pub fn is_complex(&self) -> bool {
        self.kind == OperationKind::Complex
    }

    pub fn has_exit(&self, exit: &str) -> bool {
        self.exits.iter().any(|e| e == exit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModelStereotype {
    MonitoringModel,
    ExecutionModel,
    CausalConnectionModel,
    ReflectionModel,
    EvaluationModel,
    ChangeModel,
    AdaptationModel,
}

impl ModelStereotype {
    pub const ALL: [ModelStereotype; 7] = [
        Self::MonitoringModel,
        Self::ExecutionModel,
        Self::CausalConnectionModel,
        Self::ReflectionModel,
        Self::EvaluationModel,
        Self::ChangeModel,
        Self::AdaptationModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MonitoringModel => "MonitoringModel",
            Self::ExecutionModel => "ExecutionModel",
            Self::CausalConnectionModel => "CausalConnectionModel",
            Self::ReflectionModel => "ReflectionModel",
            Self::EvaluationModel => "EvaluationModel",
            Self::ChangeModel => "ChangeModel",
            Self::AdaptationModel => "AdaptationModel",
        }
    }
}

impl FromStr for ModelStereotype {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model stereotype `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSlot {
    pub name: String,
    pub display: Option<String>,
    pub stereotype: Option<ModelStereotype>,
    /// The slot holds a live megamodel instance (procedural reflection).
    pub megamodel_ref: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Initial,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlState {
    pub name: String,
    pub kind: StateKind,
    /// Reaching this state destroys the executing instance.
    pub destruction: bool,
}

impl ControlState {
    pub fn is_initial(&self) -> bool {
        self.kind == StateKind::Initial
    }

    pub fn is_final(&self) -> bool {
        self.kind == StateKind::Final
    }
}

/// Flow endpoint: a state, a decision, an operation, or `operation.compartment`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub element: String,
    pub compartment: Option<String>,
}

impl Endpoint {
    pub fn element(name: &str) -> Self {
        Self {
            element: name.to_string(),
            compartment: None,
        }
    }

    pub fn compartment(element: &str, compartment: &str) -> Self {
        Self {
            element: element.to_string(),
            compartment: Some(compartment.to_string()),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.compartment {
            Some(c) => write!(f, "{}.{}", self.element, c),
            None => f.write_str(&self.element),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEdge {
    pub source: Endpoint,
    pub target: Endpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    When(ConditionExpr),
    Else,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub guard: Guard,
    pub target: Endpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionNode {
    pub name: String,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Megamodel {
    pub name: String,
    pub models: Vec<ModelSlot>,
    pub states: Vec<ControlState>,
    pub operations: Vec<Operation>,
    pub decisions: Vec<DecisionNode>,
    pub flows: Vec<FlowEdge>,
    pub source: SourceMap,
}

/// A named element of a megamodel.
#[derive(Debug, Clone, Copy)]
pub enum Element<'a> {
    State(&'a ControlState),
    Operation(&'a Operation),
    Decision(&'a DecisionNode),
    Model(&'a ModelSlot),
}

impl Megamodel {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn operation(&self, name: &str) -> Option<&Operation> {
        self.operations.iter().find(|o| o.name == name)
    }

    pub fn state(&self, name: &str) -> Option<&ControlState> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn decision(&self, name: &str) -> Option<&DecisionNode> {
        self.decisions.iter().find(|d| d.name == name)
    }

    pub fn decision_mut(&mut self, name: &str) -> Option<&mut DecisionNode> {
        self.decisions.iter_mut().find(|d| d.name == name)
    }

    pub fn slot(&self, name: &str) -> Option<&ModelSlot> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Resolves a control-flow element name (states, operations, decisions).
    pub fn element(&self, name: &str) -> Option<Element<'_>> {
        self.state(name)
            .map(Element::State)
            .or_else(|| self.operation(name).map(Element::Operation))
            .or_else(|| self.decision(name).map(Element::Decision))
            .or_else(|| self.slot(name).map(Element::Model))
    }

    pub fn initial_states(&self) -> impl Iterator<Item = &ControlState> {
        self.states.iter().filter(|s| s.is_initial())
    }

    pub fn final_states(&self) -> impl Iterator<Item = &ControlState> {
        self.states.iter().filter(|s| s.is_final())
    }

    /// Outgoing flows of an element, optionally restricted to one compartment.
    pub fn flows_from<'a>(
        &'a self,
        element: &'a str,
        compartment: Option<&'a str>,
    ) -> impl Iterator<Item = &'a FlowEdge> + 'a {
        self.flows.iter().filter(move |f| {
            f.source.element == element && f.source.compartment.as_deref() == compartment
        })
    }

    /// Activities realized by this megamodel's operations.
    pub fn activities(&self) -> BTreeSet<Activity> {
        self.operations.iter().filter_map(|o| o.stereotype).collect()
    }
}

/// Entry and exit points of a megamodel when invoked through a complex operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub entries: BTreeSet<String>,
    pub exits: BTreeSet<String>,
}

impl Signature {
    /// A single entry lets the complex operation omit its entry compartment.
    pub fn single_entry(&self) -> bool {
        self.entries.len() == 1
    }

    pub fn single_exit(&self) -> bool {
        self.exits.len() == 1
    }
}

pub fn signature_of(megamodel: &Megamodel) -> Signature {
    Signature {
        entries: megamodel.initial_states().map(|s| s.name.clone()).collect(),
        exits: megamodel.final_states().map(|s| s.name.clone()).collect(),
    }
}

/// Adaptation-activity label of a megamodel module, e.g. `M..PE` or `AP`.
///
/// Present letters appear in M, A, P, E order; a gap of absent letters between
/// present ones is rendered as `..`, leading and trailing gaps are dropped.
pub fn mape_label(megamodel: &Megamodel) -> String {
    let present = megamodel.activities();
    let mut label = String::new();
    let mut gap = false;
    for activity in Activity::ALL {
        if present.contains(&activity) {
            if gap && !label.is_empty() {
                label.push_str("..");
            }
            gap = false;
            label.push(activity.letter());
        } else {
            gap = true;
        }
    }
    label
}
