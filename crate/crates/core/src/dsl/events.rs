//! Event-type declarations: `event A; event B extends A;`.

use super::lexer::Cursor;
use crate::diag::{codes, has_errors, Diagnostic};
use crate::metamodel::EventTypes;
use std::fmt::Write as _;
use std::sync::Arc;

pub fn parse_events(text: &str) -> Result<EventTypes, Vec<Diagnostic>> {
    parse_events_file(text, "<events>")
}

pub fn parse_events_file(text: &str, file: &str) -> Result<EventTypes, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from(file);
    let mut cur = Cursor::new(text, &file).map_err(|d| vec![d])?;
    let mut types = EventTypes::new();
    let mut diags = Vec::new();
    while !cur.at_eof() {
        let start = cur.expect_keyword("event").map_err(|d| vec![d])?.start;
        let (name, _) = cur.ident().map_err(|d| vec![d])?;
        let parent = if cur.eat_keyword("extends") {
            Some(cur.ident().map_err(|d| vec![d])?.0)
        } else {
            None
        };
        cur.expect_punct(";").map_err(|d| vec![d])?;
        if !types.declare(&name, parent.as_deref()) {
            diags.push(
                Diagnostic::error(codes::EVENT_DUP, format!("event:{name}"), "event type declared twice")
                    .with_span(Some(cur.span_from(start))),
            );
        }
    }
    diags.extend(types.check());
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(types)
    }
}

pub fn serialize_events(types: &EventTypes) -> String {
    let mut out = String::new();
    for name in types.names() {
        match types.parent(name) {
            Some(p) => {
                let _ = writeln!(out, "event {name} extends {p};");
            }
            None => {
                let _ = writeln!(out, "event {name};");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declarations() {
        let t = parse_events("event RtException; event OutOfMemoryRtException extends RtException;").unwrap();
        assert!(t.is_a("OutOfMemoryRtException", "RtException"));
        assert_eq!(parse_events(&serialize_events(&t)).unwrap(), t);
        let dup = parse_events("event A; event A;").unwrap_err();
        assert_eq!(dup[0].code, codes::EVENT_DUP);
        let cyc = parse_events("event A extends B; event B extends A;").unwrap_err();
        assert!(cyc.iter().any(|d| d.code == codes::EVENT_CYCLE));
    }
}
