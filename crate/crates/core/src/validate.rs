//! Checking a set of documents together: event types and megamodels are
//! loaded first so layer diagrams can be checked against them.

use crate::diag::{codes, has_errors, Diagnostic};
use crate::dsl::{parse_events_file, parse_fld_unchecked, parse_ld_unchecked, parse_patch_file};
use crate::metamodel::{check_architecture, check_megamodel, EventTypes, Registry};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocKind {
    Events,
    Megamodel,
    Architecture,
    Patch,
}

impl DocKind {
    /// By file extension: `.evt`, `.fld`, `.ld`, `.patch`.
    pub fn from_path(path: &str) -> Option<Self> {
        match Path::new(path).extension()?.to_str()? {
            "evt" => Some(Self::Events),
            "fld" => Some(Self::Megamodel),
            "ld" => Some(Self::Architecture),
            "patch" => Some(Self::Patch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Document {
    pub path: String,
    pub kind: DocKind,
    pub text: String,
}

impl Document {
    pub fn new(path: &str, kind: DocKind, text: &str) -> Self {
        Self {
            path: path.to_string(),
            kind,
            text: text.to_string(),
        }
    }
}

/// Diagnostics per document, in input order.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub files: Vec<(String, Vec<Diagnostic>)>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.files.iter().any(|(_, d)| has_errors(d))
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &Diagnostic> {
        self.files.iter().flat_map(|(_, d)| d)
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.diagnostics().map(|d| d.code).collect()
    }
}

fn merge(into: &mut EventTypes, from: &EventTypes, path: &str, diags: &mut Vec<Diagnostic>) {
    for name in from.names() {
        if !into.declare(name, from.parent(name)) {
            diags.push(Diagnostic::error(
                codes::EVENT_DUP,
                format!("event:{name}"),
                format!("event type `{name}` is also declared elsewhere ({path})"),
            ));
        }
    }
}

pub fn validate_documents(docs: &[Document]) -> ValidationReport {
    let mut out: Vec<Vec<Diagnostic>> = vec![Vec::new(); docs.len()];
    let mut events = EventTypes::new();
    for (i, d) in docs.iter().enumerate().filter(|(_, d)| d.kind == DocKind::Events) {
        match parse_events_file(&d.text, &d.path) {
            Ok(types) => merge(&mut events, &types, &d.path, &mut out[i]),
            Err(diags) => out[i].extend(diags),
        }
    }
    let mut registry = Registry::new();
    for (i, d) in docs.iter().enumerate().filter(|(_, d)| d.kind == DocKind::Megamodel) {
        match parse_fld_unchecked(&d.text, &Arc::from(d.path.as_str())) {
            Ok(m) => {
                let diags = check_megamodel(&m);
                if !has_errors(&diags) {
                    if registry.contains_key(&m.name) {
                        out[i].push(Diagnostic::error(
                            codes::DUP_NAME,
                            String::new(),
                            format!("megamodel `{}` is declared by another file", m.name),
                        ));
                    }
                    registry.insert(m.name.clone(), Arc::new(m));
                }
                out[i].extend(diags);
            }
            Err(d) => out[i].push(d),
        }
    }
    for (i, d) in docs.iter().enumerate() {
        match d.kind {
            DocKind::Architecture => match parse_ld_unchecked(&d.text, &Arc::from(d.path.as_str())) {
                Ok(a) => out[i].extend(check_architecture(&a, &registry, &events)),
                Err(diag) => out[i].push(diag),
            },
            DocKind::Patch => {
                if let Err(diags) = parse_patch_file(&d.text, &d.path) {
                    out[i].extend(diags);
                }
            }
            DocKind::Events | DocKind::Megamodel => {}
        }
    }
    ValidationReport {
        files: docs.iter().map(|d| d.path.clone()).zip(out).collect(),
    }
}
