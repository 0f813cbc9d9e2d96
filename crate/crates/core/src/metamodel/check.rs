//! Well-formedness rules for megamodels and layer diagrams.

use super::architecture::{ArchitectureDecl, EdgeMode, ModuleKind, UseEdge};
use super::events::EventTypes;
use super::megamodel::{Element, Endpoint, Guard, Megamodel, ModelStereotype, Operation, StateKind};
use crate::diag::{codes, Diagnostic, SourceMap};
use crate::trigger::EventPattern;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

/// `[A-Za-z_][A-Za-z0-9_-]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

struct Sink<'a> {
    source: &'a SourceMap,
    diags: Vec<Diagnostic>,
}

impl Sink<'_> {
    fn error(&mut self, code: &'static str, path: String, message: String) {
        let span = self.source.lookup(&path);
        self.diags.push(Diagnostic::error(code, path, message).with_span(span));
    }

    fn warning(&mut self, code: &'static str, path: String, message: String) {
        let span = self.source.lookup(&path);
        self.diags.push(Diagnostic::warning(code, path, message).with_span(span));
    }
}

pub fn check_megamodel(m: &Megamodel) -> Vec<Diagnostic> {
    let mut sink = Sink {
        source: &m.source,
        diags: Vec::new(),
    };
    if m.name.trim().is_empty() {
        sink.error(codes::NAME_INVALID, String::new(), "megamodel name is empty".into());
    }
    check_names(m, &mut sink);
    check_states(m, &mut sink);
    check_operations(m, &mut sink);
    for slot in &m.models {
        if slot.megamodel_ref
            && !matches!(slot.stereotype, None | Some(ModelStereotype::ReflectionModel))
        {
            sink.error(
                codes::SLOT_REF,
                format!("model:{}", slot.name),
                "megamodel-ref slots must be ReflectionModel or unstereotyped".into(),
            );
        }
    }
    check_flows(m, &mut sink);
    check_decisions(m, &mut sink);
    if !has_errors(&sink.diags) {
        check_reachability(m, &mut sink);
    }
    sink.diags
}

fn has_errors(diags: &[Diagnostic]) -> bool {
    crate::diag::has_errors(diags)
}

fn check_names(m: &Megamodel, sink: &mut Sink) {
    let mut seen: HashMap<&str, &str> = HashMap::new();
    let named = m
        .models
        .iter()
        .map(|x| ("model", x.name.as_str()))
        .chain(m.states.iter().map(|x| ("state", x.name.as_str())))
        .chain(m.operations.iter().map(|x| ("operation", x.name.as_str())))
        .chain(m.decisions.iter().map(|x| ("decision", x.name.as_str())));
    for (kind, name) in named {
        let path = format!("{kind}:{name}");
        if !is_identifier(name) {
            sink.error(codes::NAME_INVALID, path.clone(), format!("`{name}` is not a valid identifier"));
        }
        if let Some(prev) = seen.insert(name, kind) {
            sink.error(
                codes::DUP_NAME,
                path,
                format!("name `{name}` already declared as a {prev}"),
            );
        }
    }
}

fn check_states(m: &Megamodel, sink: &mut Sink) {
    if m.initial_states().next().is_none() {
        sink.error(codes::NO_INITIAL, String::new(), "megamodel has no initial state".into());
    }
    if m.final_states().next().is_none() {
        sink.error(codes::NO_FINAL, String::new(), "megamodel has no final state".into());
    }
    for s in &m.states {
        if s.destruction && s.kind != StateKind::Final {
            sink.error(
                codes::STATE_DESTR,
                format!("state:{}", s.name),
                "a destruction state must be final".into(),
            );
        }
    }
}

fn check_operations(m: &Megamodel, sink: &mut Sink) {
    for op in &m.operations {
        let path = format!("operation:{}", op.name);
        if op.exits.is_empty() {
            sink.error(codes::OP_EXITS, path.clone(), "operation declares no exits".into());
        }
        if !op.is_complex() && !op.entries.is_empty() {
            sink.error(
                codes::OP_ENTRIES,
                path.clone(),
                "basic operations have no entry compartments".into(),
            );
        }
        for (what, list) in [("entry", &op.entries), ("exit", &op.exits)] {
            let mut seen = HashSet::new();
            for c in list {
                if !is_identifier(c) {
                    sink.error(
                        codes::NAME_INVALID,
                        format!("{path}/{what}:{c}"),
                        format!("`{c}` is not a valid compartment name"),
                    );
                }
                if !seen.insert(c) {
                    sink.error(
                        codes::DUP_COMPARTMENT,
                        format!("{path}/{what}:{c}"),
                        format!("duplicate {what} compartment `{c}`"),
                    );
                }
            }
        }
        let mut seen = HashSet::new();
        for usage in &op.usages {
            let upath = format!("{path}/{}:{}", usage.kind.keyword(), usage.slot);
            if m.slot(&usage.slot).is_none() {
                sink.error(
                    codes::USAGE_SLOT,
                    upath.clone(),
                    format!("usage refers to unknown model `{}`", usage.slot),
                );
            }
            if !seen.insert((usage.kind, usage.slot.as_str())) {
                sink.error(codes::USAGE_DUP, upath, "duplicate model usage".into());
            }
        }
    }
}

fn endpoint_error(m: &Megamodel, ep: &Endpoint) -> Option<String> {
    match m.element(&ep.element) {
        None => Some(format!("unknown element `{}`", ep.element)),
        Some(_) => None,
    }
}

/// Validates a flow or branch target; returns the rule violated, if any.
fn target_error(m: &Megamodel, ep: &Endpoint) -> Option<(&'static str, String)> {
    if let Some(msg) = endpoint_error(m, ep) {
        return Some((codes::FLOW_ENDPOINT, msg));
    }
    let bad = |msg: String| Some((codes::FLOW_TARGET, msg));
    match (m.element(&ep.element)?, ep.compartment.as_deref()) {
        (Element::State(s), None) if s.is_final() => None,
        (Element::State(s), _) => bad(format!("`{}` is not a final state", s.name)),
        (Element::Decision(_), None) => None,
        (Element::Operation(op), None) if !op.is_complex() || op.entries.len() <= 1 => None,
        (Element::Operation(op), None) => bad(format!(
            "`{}` has several entries; name one as `{}.<entry>`",
            op.name, op.name
        )),
        (Element::Operation(op), Some(c)) if op.is_complex() && op.entries.iter().any(|e| e == c) => None,
        (Element::Operation(op), Some(c)) => bad(format!("`{}` has no entry compartment `{c}`", op.name)),
        (Element::Decision(d), Some(_)) => bad(format!("decision `{}` has no compartments", d.name)),
        (Element::Model(s), _) => bad(format!("model `{}` is not a control-flow element", s.name)),
    }
}

fn check_flows(m: &Megamodel, sink: &mut Sink) {
    let mut outgoing: HashMap<(&str, Option<&str>), usize> = HashMap::new();
    for (i, flow) in m.flows.iter().enumerate() {
        let path = format!("flow:{i}");
        let src = &flow.source;
        match (m.element(&src.element), src.compartment.as_deref()) {
            (None, _) => sink.error(
                codes::FLOW_ENDPOINT,
                path.clone(),
                format!("unknown element `{}`", src.element),
            ),
            (Some(Element::State(s)), None) if s.is_initial() => {}
            (Some(Element::Operation(op)), Some(c)) if op.has_exit(c) => {}
            (Some(_), _) => sink.error(
                codes::FLOW_SOURCE,
                path.clone(),
                format!("`{src}` is neither an initial state nor an operation exit"),
            ),
        }
        *outgoing
            .entry((src.element.as_str(), src.compartment.as_deref()))
            .or_default() += 1;
        if let Some((code, msg)) = target_error(m, &flow.target) {
            sink.error(code, path, msg);
        }
    }
    for s in m.initial_states() {
        let n = outgoing.get(&(s.name.as_str(), None)).copied().unwrap_or(0);
        if n != 1 {
            sink.error(
                codes::INIT_FLOW,
                format!("state:{}", s.name),
                format!("initial state has {n} outgoing flows, expected 1"),
            );
        }
    }
    for op in &m.operations {
        for exit in &op.exits {
            let n = outgoing
                .get(&(op.name.as_str(), Some(exit.as_str())))
                .copied()
                .unwrap_or(0);
            if n != 1 {
                sink.error(
                    codes::EXIT_FLOW,
                    format!("operation:{}/exit:{exit}", op.name),
                    format!("exit has {n} outgoing flows, expected 1"),
                );
            }
        }
    }
}

fn check_decisions(m: &Megamodel, sink: &mut Sink) {
    for d in &m.decisions {
        let path = format!("decision:{}", d.name);
        let elses: Vec<usize> = d
            .branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.guard == Guard::Else)
            .map(|(i, _)| i)
            .collect();
        if elses.len() != 1 || elses[0] + 1 != d.branches.len() {
            sink.error(
                codes::DEC_ELSE,
                path.clone(),
                "a decision needs exactly one else branch, listed last".into(),
            );
        }
        for (i, branch) in d.branches.iter().enumerate() {
            let bpath = format!("{path}/branch:{i}");
            if let Some((code, msg)) = target_error(m, &branch.target) {
                sink.error(code, bpath.clone(), msg);
            }
            if let Guard::When(expr) = &branch.guard {
                for atom in expr.atoms() {
                    let Some((op, exit)) = atom.reference() else { continue };
                    match m.operation(op) {
                        None => sink.error(
                            codes::COND_REF,
                            bpath.clone(),
                            format!("condition refers to unknown operation `{op}`"),
                        ),
                        Some(o) => {
                            if let Some(e) = exit.filter(|e| !o.has_exit(e)) {
                                sink.error(
                                    codes::COND_REF,
                                    bpath.clone(),
                                    format!("operation `{op}` has no exit `{e}`"),
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}

fn check_reachability(m: &Megamodel, sink: &mut Sink) {
    let mut next: HashMap<&str, Vec<&str>> = HashMap::new();
    for f in &m.flows {
        next.entry(f.source.element.as_str())
            .or_default()
            .push(f.target.element.as_str());
    }
    for d in &m.decisions {
        for b in &d.branches {
            next.entry(d.name.as_str())
                .or_default()
                .push(b.target.element.as_str());
        }
    }
    let mut seen: HashSet<&str> = m.initial_states().map(|s| s.name.as_str()).collect();
    let mut queue: VecDeque<&str> = seen.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for &t in next.get(n).into_iter().flatten() {
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    let elements = m
        .operations
        .iter()
        .map(|o| ("operation", &o.name))
        .chain(m.decisions.iter().map(|d| ("decision", &d.name)))
        .chain(m.final_states().map(|s| ("state", &s.name)));
    for (kind, name) in elements {
        if !seen.contains(name.as_str()) {
            sink.warning(
                codes::UNREACHABLE,
                format!("{kind}:{name}"),
                format!("`{name}` is unreachable from every initial state"),
            );
        }
    }
}

/// Checks whether a complex operation can invoke `callee` (name-set equality).
pub fn signature_compatible(op: &Operation, callee: &Megamodel) -> Result<(), String> {
    let sig = super::megamodel::signature_of(callee);
    let exits: BTreeSet<String> = op.exits.iter().cloned().collect();
    if exits != sig.exits {
        return Err(format!(
            "operation `{}` exits {:?} do not match final states {:?} of `{}`",
            op.name, exits, sig.exits, callee.name
        ));
    }
    if op.entries.is_empty() {
        if !sig.single_entry() {
            return Err(format!(
                "operation `{}` omits its entry but `{}` has initial states {:?}",
                op.name, callee.name, sig.entries
            ));
        }
    } else {
        let entries: BTreeSet<String> = op.entries.iter().cloned().collect();
        if entries != sig.entries {
            return Err(format!(
                "operation `{}` entries {:?} do not match initial states {:?} of `{}`",
                op.name, entries, sig.entries, callee.name
            ));
        }
    }
    Ok(())
}

/// Registry of loaded megamodels, keyed by megamodel name.
pub type Registry = BTreeMap<String, Arc<Megamodel>>;

/// Rules that need neither megamodels nor event declarations.
pub fn check_architecture_structure(a: &ArchitectureDecl) -> Vec<Diagnostic> {
    let mut sink = Sink {
        source: &a.source,
        diags: Vec::new(),
    };
    let mut layers = HashSet::new();
    for l in &a.layers {
        if !layers.insert(l.index) {
            sink.error(
                codes::LAYER_DUP,
                format!("layer:{}", l.index),
                format!("layer {} declared twice", l.index),
            );
        }
    }
    let mut modules: HashMap<&str, (ModuleKind, u32)> = HashMap::new();
    for m in &a.modules {
        let path = format!("module:{}", m.instance);
        if !is_identifier(&m.instance) {
            sink.error(
                codes::NAME_INVALID,
                path.clone(),
                format!("`{}` is not a valid identifier", m.instance),
            );
        }
        if modules.insert(&m.instance, (m.kind, m.layer)).is_some() {
            sink.error(codes::MOD_DUP, path.clone(), format!("module `{}` declared twice", m.instance));
        }
        if !layers.contains(&m.layer) {
            sink.error(codes::LAYER_UNKNOWN, path.clone(), format!("layer {} is not declared", m.layer));
        }
        if m.layer == 0 && m.kind == ModuleKind::Megamodel {
            sink.error(
                codes::LAYER_ZERO,
                path,
                "layer 0 holds the adaptable software only".into(),
            );
        }
    }
    let is_mm = |name: &str| matches!(modules.get(name), Some((ModuleKind::Megamodel, _)));

    let directed = |sink: &mut Sink, path: String, from: &str, to: &str| {
        let (Some(&(_, lf)), Some(&(_, lt))) = (modules.get(from), modules.get(to)) else {
            for n in [from, to] {
                if !modules.contains_key(n) {
                    sink.error(codes::EDGE_MODULE, path.clone(), format!("unknown module `{n}`"));
                }
            }
            return;
        };
        if lt > lf {
            sink.error(
                codes::LAYER_DIR,
                path,
                format!("`{from}` (layer {lf}) must not reach up to `{to}` (layer {lt})"),
            );
        }
    };

    for (i, s) in a.senses.iter().enumerate() {
        let path = format!("sense:{i}");
        directed(&mut sink, path.clone(), &s.sensing, &s.sensed);
        if s.mode != EdgeMode::Read {
            sink.error(codes::EDGE_MODE, path.clone(), "sense edges have mode r".into());
        }
        if s.trigger.is_some() && modules.contains_key(s.sensing.as_str()) && !is_mm(&s.sensing) {
            sink.error(
                codes::TRIG_TARGET,
                path,
                format!("trigger on `{}`, which is not a megamodel module", s.sensing),
            );
        }
    }
    for (i, e) in a.effects.iter().enumerate() {
        let path = format!("effect:{i}");
        directed(&mut sink, path.clone(), &e.source, &e.target);
        if e.mode == EdgeMode::Read {
            sink.error(codes::EDGE_MODE, path, "effect edges have mode w or a".into());
        }
    }
    let mut seen = HashSet::new();
    for (i, u) in a.uses.iter().enumerate() {
        let path = format!("use:{i}");
        if !is_mm(&u.module) {
            sink.error(
                codes::USE_SOURCE,
                path.clone(),
                format!("use edge source `{}` is not a megamodel module", u.module),
            );
        }
        if !seen.insert((u.module.as_str(), u.op.as_str())) {
            sink.error(
                codes::USE_DUP,
                path,
                format!("operation `{}.{}` bound twice", u.module, u.op),
            );
        }
    }
    let mut seen = HashSet::new();
    for (i, b) in a.model_bindings.iter().enumerate() {
        let path = format!("bind-model:{i}");
        for n in [&b.module, &b.target] {
            if !is_mm(n) {
                sink.error(
                    codes::BIND_MODEL,
                    path.clone(),
                    format!("`{n}` is not a megamodel module"),
                );
            }
        }
        if !seen.insert((b.module.as_str(), b.slot.as_str())) {
            sink.error(
                codes::BIND_MODEL,
                path,
                format!("slot `{}.{}` bound twice", b.module, b.slot),
            );
        }
    }
    check_use_cycles(a, &mut sink);
    sink.diags
}

fn check_use_cycles(a: &ArchitectureDecl, sink: &mut Sink) {
    let mut graph: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for u in &a.uses {
        if a.module(&u.target).map(|m| m.kind) == Some(ModuleKind::Megamodel) {
            graph.entry(&u.module).or_default().insert(&u.target);
        }
    }
    // colors: 0 unvisited, 1 on stack, 2 done
    let mut color: HashMap<&str, u8> = HashMap::new();
    let mut reported = BTreeSet::new();
    fn visit<'a>(
        n: &'a str,
        graph: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        color: &mut HashMap<&'a str, u8>,
        cyclic: &mut BTreeSet<&'a str>,
    ) {
        color.insert(n, 1);
        for &t in graph.get(n).into_iter().flatten() {
            match color.get(t).copied().unwrap_or(0) {
                0 => visit(t, graph, color, cyclic),
                1 => {
                    cyclic.insert(t);
                }
                _ => {}
            }
        }
        color.insert(n, 2);
    }
    for &n in graph.keys() {
        if color.get(n).copied().unwrap_or(0) == 0 {
            visit(n, &graph, &mut color, &mut reported);
        }
    }
    for n in reported {
        sink.error(
            codes::USE_CYCLE,
            format!("module:{n}"),
            format!("use edges form a cycle through `{n}`"),
        );
    }
}

/// Megamodel instantiated by a module, if any.
fn module_megamodel<'r>(a: &ArchitectureDecl, registry: &'r Registry, instance: &str) -> Option<&'r Arc<Megamodel>> {
    a.module(instance)
        .filter(|m| m.kind == ModuleKind::Megamodel)
        .and_then(|m| registry.get(&m.source_ref))
}

/// Validates a single use edge against the current registry.
pub fn check_use_edge(a: &ArchitectureDecl, registry: &Registry, u: &UseEdge) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let Some(mm) = module_megamodel(a, registry, &u.module) else {
        return out;
    };
    let Some(op) = mm.operation(&u.op) else {
        out.push((codes::USE_OP, format!("`{}` has no operation `{}`", mm.name, u.op)));
        return out;
    };
    match a.module(&u.target).map(|m| m.kind) {
        Some(ModuleKind::Megamodel) => {
            if !op.is_complex() {
                out.push((
                    codes::USE_KIND,
                    format!("basic operation `{}` must be bound to a software module", op.name),
                ));
            } else if let Some(callee) = module_megamodel(a, registry, &u.target) {
                if let Err(msg) = signature_compatible(op, callee) {
                    out.push((codes::SIG_MISMATCH, msg));
                }
                for usage in &op.usages {
                    if callee.slot(&usage.slot).is_none() {
                        out.push((
                            codes::PARAM_ALIAS,
                            format!(
                                "parameter model `{}` has no same-named slot in `{}`",
                                usage.slot, callee.name
                            ),
                        ));
                    }
                }
            }
        }
        _ => {
            if op.is_complex() {
                out.push((
                    codes::USE_KIND,
                    format!("complex operation `{}` must be bound to a megamodel module", op.name),
                ));
            }
        }
    }
    out
}

/// Operations reachable from a module through use edges (including its own).
fn reachable_operations(a: &ArchitectureDecl, registry: &Registry, root: &str) -> BTreeSet<String> {
    let mut ops = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![root.to_string()];
    while let Some(inst) = stack.pop() {
        if !seen.insert(inst.clone()) {
            continue;
        }
        if let Some(mm) = module_megamodel(a, registry, &inst) {
            ops.extend(mm.operations.iter().map(|o| o.name.clone()));
        }
        for u in a.uses.iter().filter(|u| u.module == inst) {
            stack.push(u.target.clone());
        }
    }
    ops
}

pub fn check_architecture(a: &ArchitectureDecl, registry: &Registry, events: &EventTypes) -> Vec<Diagnostic> {
    let mut diags = check_architecture_structure(a);
    let mut sink = Sink {
        source: &a.source,
        diags: Vec::new(),
    };
    for m in a.megamodel_modules() {
        if !registry.contains_key(&m.source_ref) {
            sink.error(
                codes::MM_UNKNOWN,
                format!("module:{}", m.instance),
                format!("megamodel `{}` is not loaded", m.source_ref),
            );
        }
    }
    for (i, u) in a.uses.iter().enumerate() {
        for (code, msg) in check_use_edge(a, registry, u) {
            sink.error(code, format!("use:{i}"), msg);
        }
    }
    for m in a.megamodel_modules() {
        let Some(mm) = registry.get(&m.source_ref) else { continue };
        for op in &mm.operations {
            if a.use_edge(&m.instance, &op.name).is_none() {
                sink.error(
                    codes::USE_MISSING,
                    format!("module:{}", m.instance),
                    format!("operation `{}` of `{}` is not bound", op.name, m.instance),
                );
            }
        }
        for slot in mm.models.iter().filter(|s| s.megamodel_ref) {
            if a.model_binding(&m.instance, &slot.name).is_none() {
                sink.error(
                    codes::BIND_MODEL,
                    format!("module:{}", m.instance),
                    format!("megamodel-ref slot `{}` of `{}` is not bound", slot.name, m.instance),
                );
            }
        }
    }
    for (i, b) in a.model_bindings.iter().enumerate() {
        let Some(mm) = module_megamodel(a, registry, &b.module) else { continue };
        match mm.slot(&b.slot) {
            Some(s) if s.megamodel_ref => {}
            Some(_) => sink.error(
                codes::BIND_MODEL,
                format!("bind-model:{i}"),
                format!("slot `{}` of `{}` is not megamodel-ref", b.slot, mm.name),
            ),
            None => sink.error(
                codes::BIND_MODEL,
                format!("bind-model:{i}"),
                format!("`{}` has no model slot `{}`", mm.name, b.slot),
            ),
        }
    }
    for (i, s) in a.senses.iter().enumerate() {
        let Some(trigger) = &s.trigger else { continue };
        let path = format!("sense:{i}");
        if let Some(mm) = module_megamodel(a, registry, &s.sensing) {
            if !mm.state(&trigger.initial_state).is_some_and(|st| st.is_initial()) {
                sink.error(
                    codes::TRIG_STATE,
                    path.clone(),
                    format!(
                        "`{}` is not an initial state of `{}`",
                        trigger.initial_state, mm.name
                    ),
                );
            }
        }
        let mut ops = None;
        for pattern in &trigger.events {
            match pattern {
                EventPattern::Type(t) => {
                    if !events.contains(t) {
                        sink.error(
                            codes::TRIG_EVENT,
                            path.clone(),
                            format!("event type `{t}` is not declared"),
                        );
                    }
                }
                EventPattern::Before(op) | EventPattern::After(op) => {
                    let ops = ops.get_or_insert_with(|| reachable_operations(a, registry, &s.sensed));
                    if !ops.contains(op) {
                        sink.error(
                            codes::TRIG_EVENT,
                            path.clone(),
                            format!("`{}` never executes an operation `{op}`", s.sensed),
                        );
                    }
                }
            }
        }
    }
    diags.extend(sink.diags);
    diags.extend(events.check());
    diags
}
