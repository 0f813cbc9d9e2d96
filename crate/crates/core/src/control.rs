//! Line-oriented control protocol handled on the engine loop.
//!
//! Each request is one line; the response is `ok` or `error CODE message`,
//! optional payload lines and a terminating blank line.

use crate::dsl::{parse_patch_file, resolve_patch_sources, serialize_ld_annotated};
use crate::error::{EngineError, Result};
use crate::metamodel::{mape_label, Event};
use crate::reflect::Snapshot;
use crate::runtime::Engine;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlResponse {
    Ok(String),
    Error { code: String, message: String },
}

impl ControlResponse {
    pub fn is_ok(&self) -> bool {
        matches!(self, Self::Ok(_))
    }

    pub fn payload(&self) -> &str {
        match self {
            Self::Ok(p) => p,
            Self::Error { .. } => "",
        }
    }

    /// Parses a framed response (the inverse of `Display`).
    pub fn parse(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let head = lines.next()?;
        if head == "ok" {
            let body: Vec<&str> = lines.collect();
            let mut payload = body.join("\n");
            while payload.ends_with('\n') {
                payload.pop();
            }
            return Some(Self::Ok(payload));
        }
        let rest = head.strip_prefix("error ")?;
        let (code, message) = rest.split_once(' ').unwrap_or((rest, ""));
        Some(Self::Error {
            code: code.to_string(),
            message: message.to_string(),
        })
    }
}

impl From<EngineError> for ControlResponse {
    fn from(err: EngineError) -> Self {
        let text = err.to_string();
        let code = err.code().to_string();
        let message = text
            .strip_prefix(&format!("{code}: "))
            .unwrap_or(&text)
            .replace('\n', " ");
        Self::Error { code, message }
    }
}

impl fmt::Display for ControlResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ok(payload) => {
                writeln!(f, "ok")?;
                // A blank line ends the frame, so payloads never contain one.
                for line in payload.lines().filter(|l| !l.trim().is_empty()) {
                    writeln!(f, "{line}")?;
                }
            }
            Self::Error { code, message } => writeln!(f, "error {code} {message}")?,
        }
        writeln!(f)
    }
}

fn usage(msg: &str) -> EngineError {
    EngineError::Control(msg.to_string())
}

impl Engine {
    /// The layer diagram in textual form, modules annotated with MAPE labels.
    pub fn list_architecture(&self) -> String {
        serialize_ld_annotated(&self.arch, |m| {
            let label = self
                .instances
                .get(&m.instance)
                .map(|i| mape_label(&i.megamodel))
                .filter(|l| !l.is_empty())?;
            Some(label)
        })
    }

    /// Executes one control request. Structural requests are only accepted
    /// at quiescence; the engine loop calls this between runs.
    pub fn handle_control_line(&mut self, line: &str) -> ControlResponse {
        match self.control_command(line) {
            Ok(payload) => ControlResponse::Ok(payload),
            Err(e) => e.into(),
        }
    }

    fn control_command(&mut self, line: &str) -> Result<String> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some((&verb, args)) = words.split_first() else {
            return Err(usage("empty request"));
        };
        if !self.is_quiescent() {
            return Err(EngineError::Reentry("engine".into()));
        }
        match (verb, args) {
            ("list", []) => Ok(self.list_architecture()),
            ("stop", []) => {
                self.stop();
                Ok(String::new())
            }
            ("snapshot", [path]) => {
                let snap = self.export_snapshot()?;
                std::fs::write(path, snap.to_json())?;
                Ok(format!("wrote {path}"))
            }
            ("import", [path]) => {
                let text = std::fs::read_to_string(path)?;
                let snap = Snapshot::from_json(&text)?;
                self.import_snapshot(&snap)?;
                Ok(format!("imported {path}"))
            }
            ("patch", [path]) => {
                let text = std::fs::read_to_string(path)?;
                let mut patch = parse_patch_file(&text, path).map_err(EngineError::PatchInvalid)?;
                let base = Path::new(path).parent().map(Path::to_path_buf).unwrap_or_default();
                resolve_patch_sources(&mut patch, &|rel| Ok(std::fs::read_to_string(base.join(rel))?))?;
                let report = self.apply_patch(&patch)?;
                Ok(format!(
                    "applied {} ({} steps) added [{}] removed [{}]",
                    report.name,
                    report.steps,
                    report.added_modules.join(" "),
                    report.removed_modules.join(" ")
                ))
            }
            ("rebind", [target_op, target]) => {
                let (module, op) = target_op
                    .split_once('.')
                    .ok_or_else(|| usage("rebind expects <module.op> <target>"))?;
                self.rebind_use(module, op, target)?;
                Ok(format!("{module}.{op} -> {target}"))
            }
            ("query", [instance]) => {
                let view = self.reflect_query(instance)?;
                Ok(serde_json::to_string_pretty(&view).expect("views serialize"))
            }
            ("emit", [event_type, source]) => {
                if !self.event_types.contains(event_type) {
                    return Err(usage(&format!("unknown event type `{event_type}`")));
                }
                let ev = Event::new(event_type, source, self.now());
                self.on_event(ev);
                Ok(String::new())
            }
            ("run", [instance, state]) => {
                let r = self.execute_run(instance, state)?;
                Ok(format!("{} {} -> {}", r.instance, r.initial_state, r.final_state))
            }
            ("time", []) => Ok(format!("{:.6}", self.now())),
            ("list" | "stop" | "time", _) => Err(usage(&format!("`{verb}` takes no arguments"))),
            ("snapshot" | "import" | "patch", _) => Err(usage(&format!("`{verb}` expects <path>"))),
            ("rebind", _) => Err(usage("rebind expects <module.op> <target>")),
            ("query", _) => Err(usage("query expects <instance>")),
            ("emit", _) => Err(usage("emit expects <EventType> <source>")),
            ("run", _) => Err(usage("run expects <instance> <initial-state>")),
            _ => self.environment_command(verb, args),
        }
    }

    /// Forwards a command to the adaptable software and queues the events it raised.
    pub fn environment_command(&mut self, verb: &str, args: &[&str]) -> Result<String> {
        let now = self.now();
        let env = self.environment.as_mut().ok_or(EngineError::NoEnvironment)?;
        let (events, payload) = env.command(verb, args, now)?;
        for ev in events {
            self.on_event(ev);
        }
        Ok(payload)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_round_trips() {
        let ok = ControlResponse::Ok("a\nb".into());
        assert_eq!(ok.to_string(), "ok\na\nb\n\n");
        assert_eq!(ControlResponse::parse(&ok.to_string()), Some(ok));
        let err: ControlResponse = EngineError::NoInstance("x".into()).into();
        assert_eq!(err.to_string(), "error E-NO-INSTANCE x\n\n");
        assert_eq!(ControlResponse::parse(&err.to_string()), Some(err));
        assert_eq!(ControlResponse::Ok(String::new()).to_string(), "ok\n\n");
        assert_eq!(ControlResponse::Ok("a\n\nb\n".into()).to_string(), "ok\na\nb\n\n");
    }

    #[test]
    fn malformed_requests_yield_one_error_line() {
        let mut engine = Engine::with_virtual_clock();
        for line in ["", "rebind x", "snapshot", "frobnicate now"] {
            let text = engine.handle_control_line(line).to_string();
            assert!(text.starts_with("error "), "{line:?}: {text}");
            assert_eq!(text.lines().filter(|l| !l.is_empty()).count(), 1);
        }
    }
}
