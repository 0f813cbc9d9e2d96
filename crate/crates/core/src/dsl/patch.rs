//! Patch files: `patch STRING { step* }`.

use super::fld::{parse_megamodel, parse_fld_file, serialize_fld};
use super::ld::{dotted, mode, trigger};
use super::lexer::{quote, Cursor, TokKind};
use crate::diag::{has_errors, Diagnostic};
use crate::error::{EngineError, Result};
use crate::metamodel::{check_megamodel, EdgeRef};
use crate::reflect::{MegamodelSource, Patch, PatchStep};
use std::fmt::Write as _;
use std::sync::Arc;

pub fn parse_patch(text: &str) -> Result<Patch, Vec<Diagnostic>> {
    parse_patch_file(text, "<patch>")
}

pub fn parse_patch_file(text: &str, file: &str) -> Result<Patch, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from(file);
    let mut cur = Cursor::new(text, &file).map_err(|d| vec![d])?;
    let patch = parse_body(&mut cur).map_err(|d| vec![d])?;
    let mut diags = Vec::new();
    for step in &patch.steps {
        if let PatchStep::LoadMegamodel(MegamodelSource::Inline(m)) = step {
            diags.extend(check_megamodel(m));
        }
    }
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(patch)
    }
}

fn parse_body(cur: &mut Cursor) -> Result<Patch, Diagnostic> {
    cur.expect_keyword("patch")?;
    let (name, _) = cur.string()?;
    let mut patch = Patch::new(&name);
    cur.expect_punct("{")?;
    while !cur.eat_punct("}") {
        if cur.is_keyword("megamodel") {
            let m = parse_megamodel(cur)?;
            patch
                .steps
                .push(PatchStep::LoadMegamodel(MegamodelSource::Inline(m)));
            continue;
        }
        let kw = match cur.peek_kind() {
            TokKind::Ident(s) => s.clone(),
            _ => return Err(cur.unexpected("a patch step")),
        };
        cur.bump();
        let step = match kw.as_str() {
            "load-megamodel" => PatchStep::LoadMegamodel(MegamodelSource::Path(cur.string()?.0)),
            "unload-megamodel" => PatchStep::UnloadMegamodel(cur.string()?.0),
            "add-layer" => {
                let (index, _) = cur.uint()?;
                let (name, _) = cur.string()?;
                PatchStep::AddLayer { index, name }
            }
            "remove-layer" => PatchStep::RemoveLayer(cur.uint()?.0),
            "add-module" | "add-software" => {
                let (layer, _) = cur.uint()?;
                let (instance, _) = cur.ident()?;
                cur.expect_punct(":")?;
                let (source, _) = cur.string()?;
                if kw == "add-module" {
                    PatchStep::AddModule {
                        layer,
                        instance,
                        megamodel: source,
                    }
                } else {
                    PatchStep::AddSoftware {
                        layer,
                        instance,
                        key: source,
                    }
                }
            }
            "remove-module" => PatchStep::RemoveModule(cur.ident()?.0),
            "add-sense" => {
                let (sensing, _) = cur.ident()?;
                cur.expect_punct("<-")?;
                let (sensed, _) = cur.ident()?;
                let mode = mode(cur)?;
                let trigger = if cur.eat_keyword("trigger") {
                    Some(trigger(cur)?)
                } else {
                    None
                };
                PatchStep::AddSense {
                    sensing,
                    sensed,
                    mode,
                    trigger,
                }
            }
            "add-effect" => {
                let (source, _) = cur.ident()?;
                cur.expect_punct("->")?;
                let (target, _) = cur.ident()?;
                let mode = mode(cur)?;
                PatchStep::AddEffect {
                    source,
                    target,
                    mode,
                }
            }
            "remove-edge" => PatchStep::RemoveEdge(edge_ref(cur)?),
            "bind-use" | "bind-model" => {
                let (module, member) = dotted(cur)?;
                cur.expect_punct("->")?;
                let (target, _) = cur.ident()?;
                if kw == "bind-use" {
                    PatchStep::BindUse {
                        module,
                        op: member,
                        target,
                    }
                } else {
                    PatchStep::BindModel {
                        module,
                        slot: member,
                        target,
                    }
                }
            }
            "set-trigger" => {
                let (sensing, _) = cur.ident()?;
                cur.expect_punct("<-")?;
                let (sensed, _) = cur.ident()?;
                let trigger = if cur.eat_keyword("none") {
                    None
                } else {
                    Some(trigger(cur)?)
                };
                PatchStep::SetTrigger {
                    sensing,
                    sensed,
                    trigger,
                }
            }
            other => {
                return Err(Diagnostic::error(
                    crate::diag::codes::SYNTAX,
                    "",
                    format!("unknown patch step `{other}`"),
                )
                .with_span(Some(cur.span_from(cur.peek().start))))
            }
        };
        patch.steps.push(step);
    }
    if !cur.at_eof() {
        return Err(cur.unexpected("end of input"));
    }
    Ok(patch)
}

fn edge_ref(cur: &mut Cursor) -> Result<EdgeRef, Diagnostic> {
    let (kind, _) = cur.ident()?;
    Ok(match kind.as_str() {
        "use" => {
            let (module, op) = dotted(cur)?;
            EdgeRef::Use { module, op }
        }
        "bind-model" => {
            let (module, slot) = dotted(cur)?;
            EdgeRef::BindModel { module, slot }
        }
        "sense" => {
            let (sensing, _) = cur.ident()?;
            cur.expect_punct("<-")?;
            let (sensed, _) = cur.ident()?;
            EdgeRef::Sense { sensing, sensed }
        }
        "effect" => {
            let (source, _) = cur.ident()?;
            cur.expect_punct("->")?;
            let (target, _) = cur.ident()?;
            EdgeRef::Effect { source, target }
        }
        other => {
            return Err(cur.unexpected(&format!("`use`, `sense`, `effect` or `bind-model` (got `{other}`)")))
        }
    })
}

pub fn serialize_patch(p: &Patch) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "patch {} {{", quote(&p.name));
    for step in &p.steps {
        let line = match step {
            PatchStep::LoadMegamodel(MegamodelSource::Path(path)) => format!("load-megamodel {}", quote(path)),
            PatchStep::LoadMegamodel(MegamodelSource::Inline(m)) => {
                let text = serialize_fld(m);
                let indented: Vec<String> = text.lines().map(|l| format!("  {l}")).collect();
                let _ = writeln!(out, "{}", indented.join("\n"));
                continue;
            }
            PatchStep::UnloadMegamodel(name) => format!("unload-megamodel {}", quote(name)),
            PatchStep::AddLayer { index, name } => format!("add-layer {index} {}", quote(name)),
            PatchStep::RemoveLayer(index) => format!("remove-layer {index}"),
            PatchStep::AddModule {
                layer,
                instance,
                megamodel,
            } => format!("add-module {layer} {instance} : {}", quote(megamodel)),
            PatchStep::AddSoftware { layer, instance, key } => {
                format!("add-software {layer} {instance} : {}", quote(key))
            }
            PatchStep::RemoveModule(name) => format!("remove-module {name}"),
            PatchStep::AddSense {
                sensing,
                sensed,
                mode,
                trigger,
            } => {
                let mut s = format!("add-sense {sensing} <- {sensed} [{}]", mode.letter());
                if let Some(t) = trigger {
                    let _ = write!(s, " trigger {}", quote(&t.to_string()));
                }
                s
            }
            PatchStep::AddEffect { source, target, mode } => {
                format!("add-effect {source} -> {target} [{}]", mode.letter())
            }
            PatchStep::RemoveEdge(edge) => format!("remove-edge {edge}"),
            PatchStep::BindUse { module, op, target } => format!("bind-use {module}.{op} -> {target}"),
            PatchStep::BindModel { module, slot, target } => {
                format!("bind-model {module}.{slot} -> {target}")
            }
            PatchStep::SetTrigger {
                sensing,
                sensed,
                trigger,
            } => match trigger {
                Some(t) => format!("set-trigger {sensing} <- {sensed} {}", quote(&t.to_string())),
                None => format!("set-trigger {sensing} <- {sensed} none"),
            },
        };
        let _ = writeln!(out, "  {line}");
    }
    out.push_str("}\n");
    out
}

/// Replaces `load-megamodel "path"` steps by the parsed megamodels.
pub fn resolve_patch_sources(patch: &mut Patch, load: &dyn Fn(&str) -> Result<String>) -> Result<()> {
    for step in &mut patch.steps {
        if let PatchStep::LoadMegamodel(source) = step {
            if let MegamodelSource::Path(path) = source {
                let text = load(path)?;
                let m = parse_fld_file(&text, path).map_err(EngineError::PatchInvalid)?;
                *source = MegamodelSource::Inline(m);
            }
        }
    }
    Ok(())
}
