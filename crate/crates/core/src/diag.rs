//! Diagnostics produced by the parsers and structural checkers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Rule identifiers carried by [`Diagnostic::code`].
pub mod codes {
    // lexical / syntactic
    pub const SYNTAX: &str = "E-SYNTAX";
    pub const NAME_INVALID: &str = "E-NAME-INVALID";
    pub const COND_PARSE: &str = "E-COND-PARSE";

    // megamodel rules
    pub const NO_INITIAL: &str = "E-NO-INITIAL";
    pub const NO_FINAL: &str = "E-NO-FINAL";
    pub const DUP_NAME: &str = "E-DUP-NAME";
    pub const OP_EXITS: &str = "E-OP-EXITS";
    pub const OP_ENTRIES: &str = "E-OP-ENTRIES";
    pub const DUP_COMPARTMENT: &str = "E-DUP-COMPARTMENT";
    pub const USAGE_SLOT: &str = "E-USAGE-SLOT";
    pub const USAGE_DUP: &str = "E-USAGE-DUP";
    pub const STATE_DESTR: &str = "E-STATE-DESTR";
    pub const SLOT_REF: &str = "E-SLOT-REF";
    pub const FLOW_ENDPOINT: &str = "E-FLOW-ENDPOINT";
    pub const FLOW_SOURCE: &str = "E-FLOW-SOURCE";
    pub const FLOW_TARGET: &str = "E-FLOW-TARGET";
    pub const EXIT_FLOW: &str = "E-EXIT-FLOW";
    pub const INIT_FLOW: &str = "E-INIT-FLOW";
    pub const DEC_ELSE: &str = "E-DEC-ELSE";
    pub const COND_REF: &str = "E-COND-REF";
    pub const UNREACHABLE: &str = "W-UNREACHABLE";

    // architecture rules
    pub const LAYER_DUP: &str = "E-LAYER-DUP";
    pub const LAYER_UNKNOWN: &str = "E-LAYER-UNKNOWN";
    pub const LAYER_ZERO: &str = "E-LAYER-ZERO";
    pub const LAYER_DIR: &str = "E-LAYER-DIR";
    pub const MOD_DUP: &str = "E-MOD-DUP";
    pub const MM_UNKNOWN: &str = "E-MM-UNKNOWN";
    pub const EDGE_MODULE: &str = "E-EDGE-MODULE";
    pub const EDGE_MODE: &str = "E-EDGE-MODE";
    pub const USE_SOURCE: &str = "E-USE-SOURCE";
    pub const USE_OP: &str = "E-USE-OP";
    pub const USE_DUP: &str = "E-USE-DUP";
    pub const USE_KIND: &str = "E-USE-KIND";
    pub const USE_MISSING: &str = "E-USE-MISSING";
    pub const USE_CYCLE: &str = "E-USE-CYCLE";
    pub const SIG_MISMATCH: &str = "E-SIG-MISMATCH";
    pub const PARAM_ALIAS: &str = "E-PARAM-ALIAS";
    pub const BIND_MODEL: &str = "E-BIND-MODEL";
    pub const TRIG_EMPTY: &str = "E-TRIG-EMPTY";
    pub const TRIG_UNIT: &str = "E-TRIG-UNIT";
    pub const TRIG_SYNTAX: &str = "E-TRIG-SYNTAX";
    pub const TRIG_STATE: &str = "E-TRIG-STATE";
    pub const TRIG_EVENT: &str = "E-TRIG-EVENT";
    pub const TRIG_TARGET: &str = "E-TRIG-TARGET";
    pub const EVENT_UNKNOWN: &str = "E-EVENT-UNKNOWN";
    pub const EVENT_CYCLE: &str = "E-EVENT-CYCLE";
    pub const EVENT_DUP: &str = "E-EVENT-DUP";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

/// 1-based line/column position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub const fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub start: Pos,
    pub end: Pos,
}

impl SourceSpan {
    pub fn new(file: Arc<str>, start: Pos, end: Pos) -> Self {
        debug_assert!(start <= end);
        Self { file, start, end }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start.line, self.start.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    /// Element path inside the checked document, e.g. `operation:Update`.
    pub path: String,
    pub span: Option<SourceSpan>,
}

impl Diagnostic {
    pub fn error(code: &'static str, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            path: path.into(),
            span: None,
        }
    }

    pub fn warning(code: &'static str, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(code, path, message)
        }
    }

    pub fn with_span(mut self, span: Option<SourceSpan>) -> Self {
        if self.span.is_none() {
            self.span = span;
        }
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if let Some(span) = &self.span {
            write!(f, "{span}: ")?;
        }
        write!(f, "{sev}[{}]", self.code)?;
        if !self.path.is_empty() {
            write!(f, " {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Source positions of parsed elements, keyed by element path.
///
/// Spans are not part of structural identity: two documents that differ only
/// in layout compare equal, so the `PartialEq` impl always returns `true`.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    file: Option<Arc<str>>,
    spans: BTreeMap<String, SourceSpan>,
}

impl SourceMap {
    pub fn new(file: Arc<str>) -> Self {
        Self {
            file: Some(file),
            spans: BTreeMap::new(),
        }
    }

    pub fn file(&self) -> Option<&Arc<str>> {
        self.file.as_ref()
    }

    pub fn insert(&mut self, path: impl Into<String>, span: SourceSpan) {
        self.spans.entry(path.into()).or_insert(span);
    }

    /// Span of `path`, falling back to the closest enclosing element.
    pub fn lookup(&self, path: &str) -> Option<SourceSpan> {
        let mut key = path;
        loop {
            if let Some(span) = self.spans.get(key) {
                return Some(span.clone());
            }
            match key.rfind('/') {
                Some(idx) => key = &key[..idx],
                None => return self.spans.get("").cloned(),
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for SourceMap {}
