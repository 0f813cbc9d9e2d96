//! Recursive-descent parser for decision conditions.
//!
//! ```text
//! or      := and ('or' and)*
//! and     := unary ('and' unary)*
//! unary   := 'not' unary | '(' or ')' | operand CMP operand
//! operand := NUMBER | atom
//! atom    := 'executions' '(' IDENT ('->' IDENT)? ')'
//!          | 'runsSince' '(' IDENT '->' IDENT ')'
//!          | 'secondsSince' '(' IDENT ('->' IDENT)? ')'
//!          | 'runCount' '(' ')'
//! ```

use super::ast::{Atom, CmpOp, ConditionExpr, Operand};
use std::fmt;

/// Parse failure with the byte offset (0-based) into the condition text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ConditionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ConditionError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    Arrow,
    Cmp(CmpOp),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ConditionError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((Tok::Arrow, start));
                i += 2;
            }
            b'<' | b'>' | b'=' | b'!' => {
                let two = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, two) {
                    (b'<', true) => CmpOp::Le,
                    (b'<', false) => CmpOp::Lt,
                    (b'>', true) => CmpOp::Ge,
                    (b'>', false) => CmpOp::Gt,
                    (b'=', true) => CmpOp::Eq,
                    (b'!', true) => CmpOp::Ne,
                    _ => {
                        return Err(ConditionError {
                            offset: start,
                            message: format!("unexpected character `{}`", c as char),
                        })
                    }
                };
                out.push((Tok::Cmp(op), start));
                i += if two { 2 } else { 1 };
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if frac == i {
                        return Err(ConditionError {
                            offset: start,
                            message: "malformed decimal literal".into(),
                        });
                    }
                }
                let value = text[start..i].parse::<f64>().map_err(|e| ConditionError {
                    offset: start,
                    message: e.to_string(),
                })?;
                out.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() {
                    let b = bytes[i];
                    let dash_ok = b == b'-' && bytes.get(i + 1) != Some(&b'>');
                    if b.is_ascii_alphanumeric() || b == b'_' || dash_ok {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(ConditionError {
                    offset: start,
                    message: format!("unexpected character `{}`", text[start..].chars().next().unwrap_or('?')),
                })
            }
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ConditionError> {
        Err(ConditionError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn or(&mut self) -> Result<ConditionExpr, ConditionError> {
        let mut lhs = self.and()?;
        while self.is_keyword("or") {
            self.bump();
            let rhs = self.and()?;
            lhs = ConditionExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<ConditionExpr, ConditionError> {
        let mut lhs = self.unary()?;
        while self.is_keyword("and") {
            self.bump();
            let rhs = self.unary()?;
            lhs = ConditionExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ConditionExpr, ConditionError> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(ConditionExpr::Not(Box::new(self.unary()?)));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let inner = self.or()?;
            if *self.peek() != Tok::RParen {
                return self.err("expected `)`");
            }
            self.bump();
            return Ok(inner);
        }
        let lhs = self.operand()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return self.err("expected comparison operator; atoms are numeric"),
        };
        self.bump();
        let rhs = self.operand()?;
        Ok(ConditionExpr::Compare { lhs, op, rhs })
    }

    fn operand(&mut self) -> Result<Operand, ConditionError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Operand::Literal(v))
            }
            Tok::Ident(name) => {
                let at = self.offset();
                self.bump();
                self.atom(&name, at).map(Operand::Atom)
            }
            Tok::End => self.err("unexpected end of condition"),
            _ => self.err("expected number or history atom"),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ConditionError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err(format!("expected {what}"))
            }
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ConditionError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn atom(&mut self, name: &str, at: usize) -> Result<Atom, ConditionError> {
        self.expect(Tok::LParen, "`(`")?;
        let atom = match name {
            "runCount" => Atom::RunCount,
            "executions" | "runsSince" | "secondsSince" => {
                let op = self.ident("operation name")?;
                let exit = if *self.peek() == Tok::Arrow {
                    self.bump();
                    Some(self.ident("exit name")?)
                } else {
                    None
                };
                match name {
                    "executions" => Atom::Executions { op, exit },
                    "secondsSince" => Atom::SecondsSince { op, exit },
                    _ => match exit {
                        Some(exit) => Atom::RunsSince { op, exit },
                        None => return self.err("runsSince needs `op -> exit`"),
                    },
                }
            }
            other => {
                return Err(ConditionError {
                    offset: at,
                    message: format!("unknown history atom `{other}`"),
                })
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(atom)
    }
}

pub fn parse_condition(text: &str) -> Result<ConditionExpr, ConditionError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let expr = parser.or()?;
    if *parser.peek() != Tok::End {
        return parser.err("unexpected trailing input");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_check_condition() {
        let expr = parse_condition("runsSince(CheckForFailures -> no_failures) > 5").unwrap();
        assert_eq!(
            expr,
            ConditionExpr::Compare {
                lhs: Operand::Atom(Atom::RunsSince {
                    op: "CheckForFailures".into(),
                    exit: "no_failures".into()
                }),
                op: CmpOp::Gt,
                rhs: Operand::Literal(5.0),
            }
        );
    }

    #[test]
    fn tautology() {
        let expr = parse_condition("runCount() >= 0").unwrap();
        assert_eq!(expr.to_string(), "runCount() >= 0");
    }

    #[test]
    fn truncated_comparison_is_rejected() {
        let err = parse_condition("executions(Update) >").unwrap_err();
        assert_eq!(err.offset, 20);
    }

    #[test]
    fn bare_atom_is_a_type_error() {
        assert!(parse_condition("executions(Update)").is_err());
        assert!(parse_condition("runsSince(Update) > 1").is_err());
        assert!(parse_condition("bogus(Update) > 1").is_err());
    }

    #[test]
    fn display_preserves_grouping() {
        for src in [
            "runCount() > 1 and (executions(A) == 0 or executions(B -> x) != 2)",
            "not (runCount() > 1 and runCount() < 3)",
            "runCount() > 1 or runCount() > 2 or runCount() > 3",
            "runCount() > 1 or (runCount() > 2 or runCount() > 3)",
            "secondsSince(A -> b) <= 2.5",
        ] {
            let expr = parse_condition(src).unwrap();
            let again = parse_condition(&expr.to_string()).unwrap();
            assert_eq!(expr, again, "{src}");
        }
    }
}
