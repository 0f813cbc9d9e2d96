//! `.ld` documents: one layered architecture per file.

use super::lexer::{quote, Cursor, PResult, TokKind, Token};
use crate::diag::{has_errors, Diagnostic, SourceMap};
use crate::metamodel::{
    check_architecture_structure, ArchitectureDecl, EdgeMode, EffectEdge, Layer, ModelBinding,
    ModuleDecl, ModuleKind, SenseEdge, UseEdge,
};
use crate::trigger::{parse_trigger, TriggerSpec};
use std::fmt::Write as _;
use std::sync::Arc;

pub fn parse_ld(text: &str) -> Result<ArchitectureDecl, Vec<Diagnostic>> {
    parse_ld_file(text, "<ld>")
}

/// Parses an architecture and runs the registry-independent checks.
pub fn parse_ld_file(text: &str, file: &str) -> Result<ArchitectureDecl, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from(file);
    let a = parse_ld_unchecked(text, &file).map_err(|d| vec![d])?;
    let diags = check_architecture_structure(&a);
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(a)
    }
}

pub fn parse_ld_unchecked(text: &str, file: &Arc<str>) -> PResult<ArchitectureDecl> {
    let mut cur = Cursor::new(text, file)?;
    let head = cur.expect_keyword("architecture")?;
    let (name, _) = cur.string()?;
    let mut a = ArchitectureDecl::new(&name);
    a.source = SourceMap::new(file.clone());
    a.source.insert("", cur.span_from(head.start));
    cur.expect_punct("{")?;
    while !cur.eat_punct("}") {
        if cur.is_keyword("layer") {
            parse_layer(&mut cur, &mut a)?;
        } else {
            parse_edge(&mut cur, &mut a)?;
        }
    }
    if !cur.at_eof() {
        return Err(cur.unexpected("end of input; one architecture per file"));
    }
    Ok(a)
}

fn parse_layer(cur: &mut Cursor, a: &mut ArchitectureDecl) -> PResult<()> {
    let start = cur.expect_keyword("layer")?.start;
    let (index, _) = cur.uint()?;
    let (name, _) = cur.string()?;
    a.source.insert(format!("layer:{index}"), cur.span_from(start));
    a.layers.push(Layer { index, name });
    cur.expect_punct("{")?;
    while !cur.eat_punct("}") {
        let mstart = cur.peek().start;
        let kind = if cur.eat_keyword("module") {
            ModuleKind::Megamodel
        } else if cur.eat_keyword("software") {
            ModuleKind::Software
        } else {
            return Err(cur.unexpected("`module` or `software`"));
        };
        let (instance, _) = cur.ident()?;
        cur.expect_punct(":")?;
        let (source_ref, _) = cur.string()?;
        a.source
            .insert(format!("module:{instance}"), cur.span_from(mstart));
        a.modules.push(ModuleDecl {
            instance,
            kind,
            source_ref,
            layer: index,
        });
    }
    Ok(())
}

pub(crate) fn mode(cur: &mut Cursor) -> PResult<EdgeMode> {
    cur.expect_punct("[")?;
    let (letter, tok) = cur.ident()?;
    let mode = EdgeMode::from_letter(&letter).ok_or_else(|| {
        Diagnostic::error(crate::diag::codes::SYNTAX, "", format!("unknown edge mode `{letter}`"))
            .with_span(Some(cur.span(tok.start, tok.end)))
    })?;
    cur.expect_punct("]")?;
    Ok(mode)
}

/// Parses a quoted trigger, mapping its errors onto the string's span.
pub(crate) fn trigger(cur: &mut Cursor) -> PResult<TriggerSpec> {
    let (text, tok) = cur.string()?;
    parse_trigger(&text).map_err(|d| d.with_span(Some(span_of(cur, &tok))))
}

fn span_of(cur: &Cursor, tok: &Token) -> crate::diag::SourceSpan {
    cur.span(tok.start, tok.end)
}

/// `IDENT '.' IDENT`
pub(crate) fn dotted(cur: &mut Cursor) -> PResult<(String, String)> {
    let (a, _) = cur.ident()?;
    cur.expect_punct(".")?;
    let (b, _) = cur.ident()?;
    Ok((a, b))
}

fn parse_edge(cur: &mut Cursor, a: &mut ArchitectureDecl) -> PResult<()> {
    let start = cur.peek().start;
    let kw = match cur.peek_kind() {
        TokKind::Ident(s) => s.clone(),
        _ => return Err(cur.unexpected("`layer` or an edge")),
    };
    match kw.as_str() {
        "use" => {
            cur.bump();
            let (module, op) = dotted(cur)?;
            cur.expect_punct("->")?;
            let (target, _) = cur.ident()?;
            a.source
                .insert(format!("use:{}", a.uses.len()), cur.span_from(start));
            a.uses.push(UseEdge { module, op, target });
        }
        "sense" => {
            cur.bump();
            let (sensing, _) = cur.ident()?;
            cur.expect_punct("<-")?;
            let (sensed, _) = cur.ident()?;
            let mode = mode(cur)?;
            let trigger = if cur.eat_keyword("trigger") {
                Some(trigger(cur)?)
            } else {
                None
            };
            a.source
                .insert(format!("sense:{}", a.senses.len()), cur.span_from(start));
            a.senses.push(SenseEdge {
                sensing,
                sensed,
                mode,
                trigger,
            });
        }
        "effect" => {
            cur.bump();
            let (source, _) = cur.ident()?;
            cur.expect_punct("->")?;
            let (target, _) = cur.ident()?;
            let mode = mode(cur)?;
            a.source
                .insert(format!("effect:{}", a.effects.len()), cur.span_from(start));
            a.effects.push(EffectEdge {
                source,
                target,
                mode,
            });
        }
        "bind-model" => {
            cur.bump();
            let (module, slot) = dotted(cur)?;
            cur.expect_punct("->")?;
            let (target, _) = cur.ident()?;
            a.source.insert(
                format!("bind-model:{}", a.model_bindings.len()),
                cur.span_from(start),
            );
            a.model_bindings.push(ModelBinding {
                module,
                slot,
                target,
            });
        }
        _ => return Err(cur.unexpected("`layer`, `use`, `sense`, `effect` or `bind-model`")),
    }
    Ok(())
}

pub fn serialize_ld(a: &ArchitectureDecl) -> String {
    serialize_ld_annotated(a, |_| None)
}

/// Serializes with an optional trailing `# comment` per module line.
pub fn serialize_ld_annotated(a: &ArchitectureDecl, annotate: impl Fn(&ModuleDecl) -> Option<String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "architecture {} {{", quote(&a.name));
    for layer in &a.layers {
        let _ = writeln!(out, "  layer {} {} {{", layer.index, quote(&layer.name));
        for m in a.modules.iter().filter(|m| m.layer == layer.index) {
            let kw = match m.kind {
                ModuleKind::Megamodel => "module",
                ModuleKind::Software => "software",
            };
            let _ = write!(out, "    {kw} {} : {}", m.instance, quote(&m.source_ref));
            if let Some(note) = annotate(m) {
                let _ = write!(out, "  # {note}");
            }
            out.push('\n');
        }
        out.push_str("  }\n");
    }
    let mut edges = String::new();
    for u in &a.uses {
        let _ = writeln!(edges, "  use {}.{} -> {}", u.module, u.op, u.target);
    }
    for s in &a.senses {
        let _ = write!(edges, "  sense {} <- {} [{}]", s.sensing, s.sensed, s.mode.letter());
        if let Some(t) = &s.trigger {
            let _ = write!(edges, " trigger {}", quote(&t.to_string()));
        }
        edges.push('\n');
    }
    for e in &a.effects {
        let _ = writeln!(edges, "  effect {} -> {} [{}]", e.source, e.target, e.mode.letter());
    }
    for b in &a.model_bindings {
        let _ = writeln!(edges, "  bind-model {}.{} -> {}", b.module, b.slot, b.target);
    }
    if !edges.is_empty() {
        if !a.layers.is_empty() {
            out.push('\n');
        }
        out.push_str(&edges);
    }
    out.push_str("}\n");
    out
}
