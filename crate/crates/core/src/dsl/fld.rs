//! `.fld` documents: one megamodel per file.

use super::lexer::{quote, Cursor, PResult, TokKind};
use crate::condition::parse_condition;
use crate::diag::{codes, has_errors, Diagnostic, Pos, SourceMap, SourceSpan};
use crate::metamodel::{
    check_megamodel, Activity, Branch, ControlState, DecisionNode, Endpoint, FlowEdge, Guard,
    Megamodel, ModelSlot, ModelStereotype, ModelUsage, Operation, OperationKind, StateKind,
    UsageKind,
};
use std::fmt::Write as _;
use std::sync::Arc;

pub fn parse_fld(text: &str) -> Result<Megamodel, Vec<Diagnostic>> {
    parse_fld_file(text, "<fld>")
}

/// Parses and checks a megamodel; warnings do not fail the parse.
pub fn parse_fld_file(text: &str, file: &str) -> Result<Megamodel, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from(file);
    let m = parse_fld_unchecked(text, &file).map_err(|d| vec![d])?;
    let diags = check_megamodel(&m);
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(m)
    }
}

/// Syntax only: the result may violate megamodel invariants.
pub fn parse_fld_unchecked(text: &str, file: &Arc<str>) -> PResult<Megamodel> {
    let mut cur = Cursor::new(text, file)?;
    let m = parse_megamodel(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.unexpected("end of input; one megamodel per file"));
    }
    Ok(m)
}

/// `megamodel STRING { item* }`; also used for inline megamodels in patches.
pub(crate) fn parse_megamodel(cur: &mut Cursor) -> PResult<Megamodel> {
    let head = cur.expect_keyword("megamodel")?;
    let (name, _) = cur.string()?;
    let mut m = Megamodel::new(&name);
    m.source = SourceMap::new(cur.file.clone());
    m.source.insert("", cur.span_from(head.start));
    cur.expect_punct("{")?;
    while !cur.eat_punct("}") {
        let start = cur.peek().start;
        let kw = match cur.peek_kind() {
            TokKind::Ident(s) => s.clone(),
            _ => return Err(cur.unexpected("a megamodel item")),
        };
        match kw.as_str() {
            "model" => {
                cur.bump();
                let (display, name) = named(cur)?;
                let stereotype = if cur.eat_punct(":") {
                    let (st, tok) = cur.ident()?;
                    Some(st.parse::<ModelStereotype>().map_err(|msg| {
                        Diagnostic::error(codes::SYNTAX, "", msg)
                            .with_span(Some(cur.span(tok.start, tok.end)))
                    })?)
                } else {
                    None
                };
                let megamodel_ref = cur.eat_keyword("megamodel-ref");
                m.source.insert(format!("model:{name}"), cur.span_from(start));
                m.models.push(ModelSlot {
                    name,
                    display,
                    stereotype,
                    megamodel_ref,
                });
            }
            "initial" | "final" | "destruction" => {
                cur.bump();
                let (name, _) = cur.ident()?;
                m.source.insert(format!("state:{name}"), cur.span_from(start));
                m.states.push(ControlState {
                    name,
                    kind: if kw == "initial" {
                        StateKind::Initial
                    } else {
                        StateKind::Final
                    },
                    destruction: kw == "destruction",
                });
            }
            "operation" | "complex" => {
                cur.bump();
                let op = parse_operation(cur, &mut m.source, kw == "complex", start)?;
                m.operations.push(op);
            }
            "flow" => {
                cur.bump();
                let source = endpoint(cur)?;
                cur.expect_punct("->")?;
                let target = endpoint(cur)?;
                m.source
                    .insert(format!("flow:{}", m.flows.len()), cur.span_from(start));
                m.flows.push(FlowEdge { source, target });
            }
            "decision" => {
                cur.bump();
                let d = parse_decision(cur, &mut m.source, start)?;
                m.decisions.push(d);
            }
            _ => return Err(cur.unexpected("`model`, a state, `operation`, `complex`, `flow` or `decision`")),
        }
    }
    Ok(m)
}

/// `IDENT` or `STRING as IDENT`.
fn named(cur: &mut Cursor) -> PResult<(Option<String>, String)> {
    if let TokKind::Str(display) = cur.peek_kind().clone() {
        cur.bump();
        cur.expect_keyword("as")?;
        let (name, _) = cur.ident()?;
        Ok((Some(display), name))
    } else {
        Ok((None, cur.ident()?.0))
    }
}

fn endpoint(cur: &mut Cursor) -> PResult<Endpoint> {
    let (element, _) = cur.ident()?;
    let compartment = if cur.eat_punct(".") {
        Some(cur.ident()?.0)
    } else {
        None
    };
    Ok(Endpoint {
        element,
        compartment,
    })
}

fn parse_operation(cur: &mut Cursor, source: &mut SourceMap, complex: bool, start: Pos) -> PResult<Operation> {
    let (display, name) = named(cur)?;
    let path = format!("operation:{name}");
    let stereotype = if cur.eat_punct("<<") {
        let (st, tok) = cur.ident()?;
        let activity = st.parse::<Activity>().map_err(|msg| {
            Diagnostic::error(codes::SYNTAX, "", msg).with_span(Some(cur.span(tok.start, tok.end)))
        })?;
        cur.expect_punct(">>")?;
        Some(activity)
    } else {
        None
    };
    source.insert(path.clone(), cur.span_from(start));
    let mut op = Operation {
        name,
        display,
        kind: if complex {
            OperationKind::Complex
        } else {
            OperationKind::Basic
        },
        stereotype,
        entries: Vec::new(),
        exits: Vec::new(),
        usages: Vec::new(),
    };
    cur.expect_punct("{")?;
    while !cur.eat_punct("}") {
        let start = cur.peek().start;
        let (kw, _) = cur.ident()?;
        match kw.as_str() {
            "entries" | "exits" => {
                cur.expect_punct("{")?;
                let items = cur.ident_list("}")?;
                cur.expect_punct("}")?;
                let what = if kw == "entries" { "entry" } else { "exit" };
                for (c, tok) in items {
                    source.insert(format!("{path}/{what}:{c}"), cur.span(tok.start, tok.end));
                    if kw == "entries" {
                        op.entries.push(c);
                    } else {
                        op.exits.push(c);
                    }
                }
            }
            other => match UsageKind::from_keyword(other) {
                Some(kind) => {
                    let (slot, _) = cur.ident()?;
                    source.insert(format!("{path}/{other}:{slot}"), cur.span_from(start));
                    op.usages.push(ModelUsage { kind, slot });
                }
                None => {
                    return Err(Diagnostic::error(
                        codes::SYNTAX,
                        "",
                        format!("expected `entries`, `exits` or a model usage, found `{other}`"),
                    )
                    .with_span(Some(cur.span_from(start))))
                }
            },
        }
    }
    Ok(op)
}

fn parse_decision(cur: &mut Cursor, source: &mut SourceMap, start: Pos) -> PResult<DecisionNode> {
    let (name, _) = cur.ident()?;
    let path = format!("decision:{name}");
    source.insert(path.clone(), cur.span_from(start));
    let mut branches = Vec::new();
    cur.expect_punct("{")?;
    while !cur.eat_punct("}") {
        let bstart = cur.peek().start;
        let guard = if cur.eat_keyword("else") {
            Guard::Else
        } else {
            cur.expect_keyword("when")?;
            let (text, tok) = cur.string()?;
            let expr = parse_condition(&text).map_err(|e| {
                let col = tok.content_column + e.offset as u32;
                let at = Pos::new(tok.start.line, col);
                Diagnostic::error(codes::COND_PARSE, format!("{path}/branch:{}", branches.len()), e.message)
                    .with_span(Some(SourceSpan::new(cur.file.clone(), at, at.max(tok.end))))
            })?;
            Guard::When(expr)
        };
        cur.expect_punct("->")?;
        let target = endpoint(cur)?;
        source.insert(format!("{path}/branch:{}", branches.len()), cur.span_from(bstart));
        branches.push(Branch { guard, target });
    }
    Ok(DecisionNode { name, branches })
}

fn decl_name(display: &Option<String>, name: &str) -> String {
    match display {
        Some(d) => format!("{} as {name}", quote(d)),
        None => name.to_string(),
    }
}

/// Canonical text: models, states, operations, decisions, flows.
pub fn serialize_fld(m: &Megamodel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "megamodel {} {{", quote(&m.name));
    let mut sections = Vec::new();

    let mut s = String::new();
    for slot in &m.models {
        let _ = write!(s, "  model {}", decl_name(&slot.display, &slot.name));
        if let Some(st) = slot.stereotype {
            let _ = write!(s, " : {}", st.name());
        }
        if slot.megamodel_ref {
            s.push_str(" megamodel-ref");
        }
        s.push('\n');
    }
    sections.push(s);

    let mut s = String::new();
    for st in &m.states {
        let kw = match (st.destruction, st.kind) {
            (true, _) => "destruction",
            (false, StateKind::Initial) => "initial",
            (false, StateKind::Final) => "final",
        };
        let _ = writeln!(s, "  {kw} {}", st.name);
    }
    sections.push(s);

    let mut s = String::new();
    for op in &m.operations {
        let kw = if op.is_complex() { "complex" } else { "operation" };
        let _ = write!(s, "  {kw} {}", decl_name(&op.display, &op.name));
        if let Some(a) = op.stereotype {
            let _ = write!(s, " <<{}>>", a.name());
        }
        s.push_str(" {\n");
        if !op.entries.is_empty() {
            let _ = writeln!(s, "    entries {{ {} }}", op.entries.join(", "));
        }
        let _ = writeln!(s, "    exits {{ {} }}", op.exits.join(", "));
        for u in &op.usages {
            let _ = writeln!(s, "    {} {}", u.kind.keyword(), u.slot);
        }
        s.push_str("  }\n");
    }
    sections.push(s);

    let mut s = String::new();
    for d in &m.decisions {
        let _ = writeln!(s, "  decision {} {{", d.name);
        for b in &d.branches {
            match &b.guard {
                Guard::When(expr) => {
                    let _ = writeln!(s, "    when {} -> {}", quote(&expr.to_string()), b.target);
                }
                Guard::Else => {
                    let _ = writeln!(s, "    else -> {}", b.target);
                }
            }
        }
        s.push_str("  }\n");
    }
    sections.push(s);

    let mut s = String::new();
    for f in &m.flows {
        let _ = writeln!(s, "  flow {} -> {}", f.source, f.target);
    }
    sections.push(s);

    let body: Vec<String> = sections.into_iter().filter(|s| !s.is_empty()).collect();
    out.push_str(&body.join("\n"));
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
megamodel "Small" {
  model "Architectural model" as ArchitecturalModel : ReflectionModel
  model Loop megamodel-ref
  initial Start   # entry
  final Done
  destruction Gone
  operation "Check it" as Check <<Analyze>> {
    exits { ok, bad }
    reads ArchitecturalModel
  }
  decision D {
    when "executions(Check -> bad) > 2" -> Gone
    else -> Done
  }
  flow Start -> Check
  flow Check.ok -> Done
  flow Check.bad -> D
}
"#;

    #[test]
    fn parses_and_round_trips() {
        let m = parse_fld(SMALL).unwrap();
        assert_eq!(m.operations[0].display.as_deref(), Some("Check it"));
        assert_eq!(m.models[1].megamodel_ref, true);
        assert!(m.state("Gone").unwrap().destruction);
        let text = serialize_fld(&m);
        let again = parse_fld(&text).unwrap();
        assert_eq!(m, again);
        assert_eq!(text, serialize_fld(&again));
    }

    #[test]
    fn empty_megamodel_is_rejected() {
        let diags = parse_fld("megamodel \"Empty\" {}").unwrap_err();
        let codes: Vec<_> = diags.iter().map(|d| d.code).collect();
        assert!(codes.contains(&codes::NO_INITIAL));
        assert!(codes.contains(&codes::NO_FINAL));
        assert!(diags.iter().all(|d| d.span.is_some()));
    }

    #[test]
    fn empty_identifier_is_a_syntax_error() {
        let diags = parse_fld("megamodel \"X\" { initial \"\" }").unwrap_err();
        assert_eq!(diags[0].code, codes::SYNTAX);
    }

    #[test]
    fn condition_errors_point_into_the_string() {
        let text = "megamodel \"X\" {\n  decision D {\n    when \"executions(Update) >\" -> A\n  }\n}";
        let diags = parse_fld(text).unwrap_err();
        assert_eq!(diags[0].code, codes::COND_PARSE);
        let span = diags[0].span.clone().unwrap();
        assert_eq!(span.start.line, 3);
        assert_eq!(span.start.column, 11 + 20);
    }
}
