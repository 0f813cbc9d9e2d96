//! Timestamped scenario scripts.
//!
//! ```text
//! at 2.5s inject c3 crash
//! every 0.5s from 1s until 10s request
//! at 30s control patch add-strategies.patch
//! ```
//!
//! `control` lines travel through the engine inbox like requests from the
//! control channel; all other lines are executed directly between runs.

use crate::error::{EngineError, Result};
use crate::trigger::parse_duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptCommand {
    pub at_micros: u64,
    pub line: String,
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Script {
    /// Sorted by time; equal times keep source order.
    pub commands: Vec<ScriptCommand>,
}

fn duration(word: Option<&str>, lineno: usize) -> Result<u64> {
    let word = word.ok_or_else(|| EngineError::Control(format!("line {lineno}: missing time")))?;
    parse_duration(word).map_err(|d| EngineError::Control(format!("line {lineno}: {}", d.message)))
}

fn expect(words: &mut std::slice::Iter<'_, &str>, kw: &str, lineno: usize) -> Result<()> {
    match words.next() {
        Some(w) if *w == kw => Ok(()),
        other => Err(EngineError::Control(format!(
            "line {lineno}: expected `{kw}`, found `{}`",
            other.unwrap_or(&"end of line")
        ))),
    }
}

impl Script {
    pub fn parse(text: &str) -> Result<Self> {
        let mut commands = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let mut it = words.iter();
            let times: Vec<u64> = match it.next().copied() {
                Some("at") => vec![duration(it.next().copied(), lineno)?],
                Some("every") => {
                    let step = duration(it.next().copied(), lineno)?;
                    expect(&mut it, "from", lineno)?;
                    let from = duration(it.next().copied(), lineno)?;
                    expect(&mut it, "until", lineno)?;
                    let until = duration(it.next().copied(), lineno)?;
                    if step == 0 {
                        return Err(EngineError::Control(format!("line {lineno}: zero step")));
                    }
                    (0..).map(|k| from + k * step).take_while(|t| *t < until).collect()
                }
                _ => return Err(EngineError::Control(format!("line {lineno}: expected `at` or `every`"))),
            };
            let mut rest: Vec<&str> = it.copied().collect();
            let control = rest.first() == Some(&"control");
            if control {
                rest.remove(0);
            }
            if rest.is_empty() {
                return Err(EngineError::Control(format!("line {lineno}: missing command")));
            }
            let cmd = rest.join(" ");
            commands.extend(times.into_iter().map(|at_micros| ScriptCommand {
                at_micros,
                line: cmd.clone(),
                control,
            }));
        }
        commands.sort_by_key(|c| c.at_micros);
        Ok(Self { commands })
    }

    pub fn end_micros(&self) -> u64 {
        self.commands.last().map_or(0, |c| c.at_micros)
    }
}
