//! Wiring an engine to the harness and driving it with a script.

use super::environment::SystemEnvironment;
use super::modules::{default_model, lock, register_modules, SharedSystem, OP_COST};
use super::script::Script;
use super::system::SystemState;
use crate::control::ControlResponse;
use crate::dsl::{parse_events_file, parse_fld_file, parse_ld_file};
use crate::error::{EngineError, Result};
use crate::fixtures;
use crate::runtime::clock::from_micros;
use crate::runtime::Engine;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptOutcome {
    pub time: f64,
    pub line: String,
    pub response: ControlResponse,
}

pub struct Scenario {
    pub engine: Engine,
    pub system: SharedSystem,
    /// Relative paths in script commands resolve against this directory.
    pub base_dir: PathBuf,
    pub outcomes: Vec<ScriptOutcome>,
}

const PATH_VERBS: [&str; 3] = ["patch", "import", "snapshot"];

impl Scenario {
    /// Attaches a fresh marketplace system and the harness modules to `engine`.
    pub fn attach(mut engine: Engine) -> Self {
        let system: SharedSystem = Arc::new(Mutex::new(SystemState::marketplace()));
        register_modules(&mut engine, &system, OP_COST);
        engine.set_environment(Box::new(SystemEnvironment::new(system.clone())));
        engine.set_model_initializer(default_model);
        Self {
            engine,
            system,
            base_dir: fixtures::fixture_dir().join("script"),
            outcomes: Vec::new(),
        }
    }

    /// Virtual-clock engine with the embedded corpus loaded and `ld` as architecture.
    pub fn fixture(ld_file: &str) -> Result<Self> {
        let mut s = Self::attach(Engine::with_virtual_clock());
        s.load_corpus()?;
        s.load_ld(fixtures::ld(ld_file), ld_file)?;
        Ok(s)
    }

    /// Loads the embedded event types and megamodels.
    pub fn load_corpus(&mut self) -> Result<()> {
        self.engine
            .set_event_types(parse_events_file(fixtures::EVENTS, "events.evt").map_err(EngineError::Load)?);
        for (file, text) in fixtures::FLDS {
            self.engine
                .load_megamodel(parse_fld_file(text, file).map_err(EngineError::Load)?)?;
        }
        Ok(())
    }

    /// Loads every `.fld` file and an optional `events.evt` from a directory.
    pub fn load_dir(&mut self, dir: &Path) -> Result<()> {
        let events = dir.join("events.evt");
        if events.exists() {
            let text = std::fs::read_to_string(&events)?;
            let types = parse_events_file(&text, &events.display().to_string()).map_err(EngineError::Load)?;
            self.engine.set_event_types(types);
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "fld"))
            .collect();
        files.sort();
        for f in files {
            let text = std::fs::read_to_string(&f)?;
            let m = parse_fld_file(&text, &f.display().to_string()).map_err(EngineError::Load)?;
            self.engine.load_megamodel(m)?;
        }
        Ok(())
    }

    pub fn load_ld(&mut self, text: &str, file: &str) -> Result<()> {
        let arch = parse_ld_file(text, file).map_err(EngineError::Load)?;
        self.engine.load(arch)
    }

    pub fn system(&self) -> MutexGuard<'_, SystemState> {
        lock(&self.system)
    }

    fn resolve_paths(&self, line: &str) -> String {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [verb, path] if PATH_VERBS.contains(verb) && Path::new(path).is_relative() => {
                format!("{verb} {}", self.base_dir.join(path).display())
            }
            _ => line.to_string(),
        }
    }

    /// Executes one script line now: `control` lines go through the inbox.
    pub fn exec(&mut self, line: &str, control: bool) -> ControlResponse {
        let line = self.resolve_paths(line);
        if control {
            let reply = self.engine.handle().control(&line);
            self.engine.drain_inbox();
            let text = reply.recv().unwrap_or_default();
            ControlResponse::parse(&text).unwrap_or_else(|| EngineError::Control("no response".into()).into())
        } else {
            self.engine.handle_control_line(&line)
        }
    }

    /// Runs the engine, interleaving script commands at their times, until
    /// `until` seconds (default: the last command's time).
    pub fn run_script(&mut self, script: &Script, until: Option<f64>) {
        for cmd in &script.commands {
            let at = from_micros(cmd.at_micros as i64);
            if until.is_some_and(|u| at >= u) {
                break;
            }
            self.engine.run_until(at);
            if self.engine.is_stopped() {
                return;
            }
            let response = self.exec(&cmd.line, cmd.control);
            self.outcomes.push(ScriptOutcome {
                time: self.engine.now(),
                line: cmd.line.clone(),
                response,
            });
        }
        let end = until.unwrap_or_else(|| from_micros(script.end_micros() as i64));
        self.engine.run_until(end);
    }

    pub fn run_script_text(&mut self, text: &str, until: Option<f64>) -> Result<()> {
        let script = Script::parse(text)?;
        self.run_script(&script, until);
        Ok(())
    }
}
