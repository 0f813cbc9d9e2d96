//! Tokenizer shared by the `.fld`, `.ld`, patch and event-declaration grammars.

use crate::diag::{codes, Diagnostic, Pos, SourceSpan};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Ident(String),
    Str(String),
    Number(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub start: Pos,
    pub end: Pos,
    /// Column of the first byte inside a string literal, for condition offsets.
    pub content_column: u32,
}

const PUNCT: [&str; 15] = [
    "->", "<-", "<<", ">>", "{", "}", "(", ")", "[", "]", ",", ":", ";", ".", "=",
];

struct Scanner<'a> {
    text: &'a str,
    at: usize,
    line: u32,
    column: u32,
}

impl Scanner<'_> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn peek(&self) -> Option<char> {
        self.text[self.at..].chars().next()
    }

    fn rest(&self) -> &str {
        &self.text[self.at..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub fn tokenize(text: &str, file: &Arc<str>) -> Result<Vec<Token>, Diagnostic> {
    let mut s = Scanner {
        text,
        at: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    let err = |start: Pos, end: Pos, msg: String| {
        Diagnostic::error(codes::SYNTAX, "", msg).with_span(Some(SourceSpan::new(file.clone(), start, end)))
    };
    while let Some(c) = s.peek() {
        let start = s.pos();
        if c.is_whitespace() {
            s.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = s.peek() {
                if c == '\n' {
                    break;
                }
                s.bump();
            }
            continue;
        }
        if c == '"' {
            s.bump();
            let content_column = s.column;
            let mut value = String::new();
            loop {
                match s.bump() {
                    None | Some('\n') => {
                        return Err(err(start, s.pos(), "unterminated string literal".into()));
                    }
                    Some('"') => break,
                    Some('\\') => match s.bump() {
                        Some('"') => value.push('"'),
                        Some('\\') => value.push('\\'),
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        other => {
                            return Err(err(
                                start,
                                s.pos(),
                                format!("unknown escape `\\{}`", other.unwrap_or(' ')),
                            ))
                        }
                    },
                    Some(ch) => value.push(ch),
                }
            }
            out.push(Token {
                kind: TokKind::Str(value),
                start,
                end: s.pos(),
                content_column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let from = s.at;
            while let Some(ch) = s.peek() {
                let dash_ok = ch == '-' && !s.rest().starts_with("->");
                if ch.is_ascii_alphanumeric() || ch == '_' || dash_ok {
                    s.bump();
                } else {
                    break;
                }
            }
            out.push(Token {
                kind: TokKind::Ident(text[from..s.at].to_string()),
                start,
                end: s.pos(),
                content_column: 0,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let from = s.at;
            while s.peek().is_some_and(|ch| ch.is_ascii_digit()) {
                s.bump();
            }
            if s.peek() == Some('.') && s.rest()[1..].starts_with(|ch: char| ch.is_ascii_digit()) {
                s.bump();
                while s.peek().is_some_and(|ch| ch.is_ascii_digit()) {
                    s.bump();
                }
            }
            out.push(Token {
                kind: TokKind::Number(text[from..s.at].to_string()),
                start,
                end: s.pos(),
                content_column: 0,
            });
            continue;
        }
        if let Some(p) = PUNCT.iter().find(|p| s.rest().starts_with(**p)) {
            for _ in 0..p.len() {
                s.bump();
            }
            out.push(Token {
                kind: TokKind::Punct(p),
                start,
                end: s.pos(),
                content_column: 0,
            });
            continue;
        }
        s.bump();
        return Err(err(start, s.pos(), format!("unexpected character `{c}`")));
    }
    let end = s.pos();
    out.push(Token {
        kind: TokKind::Eof,
        start: end,
        end,
        content_column: 0,
    });
    Ok(out)
}

/// Recursive-descent helper over a token stream.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    pub file: Arc<str>,
}

pub type PResult<T> = Result<T, Diagnostic>;

impl Cursor {
    pub fn new(text: &str, file: &Arc<str>) -> PResult<Self> {
        Ok(Self {
            toks: tokenize(text, file)?,
            pos: 0,
            file: file.clone(),
        })
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn peek_kind(&self) -> &TokKind {
        &self.toks[self.pos].kind
    }

    pub fn bump(&mut self) -> Token {
        let tok = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek_kind(), TokKind::Eof)
    }

    pub fn span(&self, start: Pos, end: Pos) -> SourceSpan {
        SourceSpan::new(self.file.clone(), start, end)
    }

    /// Span from `start` to the end of the previously consumed token.
    pub fn span_from(&self, start: Pos) -> SourceSpan {
        let end = if self.pos == 0 {
            start
        } else {
            self.toks[self.pos - 1].end
        };
        self.span(start, end.max(start))
    }

    pub fn error_here(&self, message: impl Into<String>) -> Diagnostic {
        let tok = self.peek();
        Diagnostic::error(codes::SYNTAX, "", message).with_span(Some(self.span(tok.start, tok.end)))
    }

    fn describe(kind: &TokKind) -> String {
        match kind {
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::Str(s) => format!("string \"{s}\""),
            TokKind::Number(n) => format!("number {n}"),
            TokKind::Punct(p) => format!("`{p}`"),
            TokKind::Eof => "end of input".into(),
        }
    }

    pub fn unexpected(&self, expected: &str) -> Diagnostic {
        self.error_here(format!(
            "expected {expected}, found {}",
            Self::describe(self.peek_kind())
        ))
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek_kind(), TokKind::Punct(q) if *q == p)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek_kind(), TokKind::Ident(s) if s == kw)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        if self.is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.is_keyword(kw) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn ident(&mut self) -> PResult<(String, Token)> {
        match self.peek_kind().clone() {
            TokKind::Ident(s) => Ok((s, self.bump())),
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn string(&mut self) -> PResult<(String, Token)> {
        match self.peek_kind().clone() {
            TokKind::Str(s) => Ok((s, self.bump())),
            _ => Err(self.unexpected("string literal")),
        }
    }

    pub fn uint(&mut self) -> PResult<(u32, Token)> {
        match self.peek_kind().clone() {
            TokKind::Number(n) => match n.parse::<u32>() {
                Ok(v) => Ok((v, self.bump())),
                Err(_) => Err(self.error_here(format!("`{n}` is not a non-negative integer"))),
            },
            _ => Err(self.unexpected("integer")),
        }
    }

    /// Comma-separated identifiers; an empty list is accepted.
    pub fn ident_list(&mut self, close: &str) -> PResult<Vec<(String, Token)>> {
        let mut items = Vec::new();
        if self.is_punct(close) {
            return Ok(items);
        }
        loop {
            items.push(self.ident()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(items)
    }
}

/// Quotes a string literal with escapes.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokKind> {
        tokenize(text, &Arc::from("t")).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn identifiers_stop_before_arrows() {
        assert_eq!(
            kinds("Update.done->Check-for-failures"),
            vec![
                TokKind::Ident("Update".into()),
                TokKind::Punct("."),
                TokKind::Ident("done".into()),
                TokKind::Punct("->"),
                TokKind::Ident("Check-for-failures".into()),
                TokKind::Eof
            ]
        );
    }

    #[test]
    fn strings_comments_and_positions() {
        let toks = tokenize("# c\n  \"a\\\"b\" <<", &Arc::from("t")).unwrap();
        assert_eq!(toks[0].kind, TokKind::Str("a\"b".into()));
        assert_eq!(toks[0].start, Pos::new(2, 3));
        assert_eq!(toks[1].kind, TokKind::Punct("<<"));
        assert_eq!(quote("a\"b"), "\"a\\\"b\"");
    }

    #[test]
    fn lexical_errors_carry_spans() {
        let err = tokenize("model @", &Arc::from("t")).unwrap_err();
        assert_eq!(err.code, codes::SYNTAX);
        assert_eq!(err.span.unwrap().start, Pos::new(1, 7));
        assert!(tokenize("\"open", &Arc::from("t")).is_err());
    }
}
