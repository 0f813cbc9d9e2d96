//! Commands the outside world applies to the adaptable software.

use super::modules::{lock, SharedSystem};
use super::system::SOFTWARE_MODULE;
use crate::error::{EngineError, Result};
use crate::metamodel::Event;
use crate::runtime::Environment;

pub struct SystemEnvironment {
    system: SharedSystem,
}

impl SystemEnvironment {
    pub fn new(system: SharedSystem) -> Self {
        Self { system }
    }
}

impl Environment for SystemEnvironment {
    fn command(&mut self, verb: &str, args: &[&str], now: f64) -> Result<(Vec<Event>, String)> {
        let mut s = lock(&self.system);
        match (verb, args) {
            ("inject", [id, kind]) => {
                let ev = s.inject_failure(id, kind, now)?;
                Ok((vec![ev], format!("{id} failed ({kind})")))
            }
            ("request", []) => {
                let events = s.request(now);
                let n = events.len();
                Ok((events, format!("{n} exceptions")))
            }
            ("load", [value]) => {
                let load: f64 = value
                    .parse()
                    .map_err(|_| EngineError::Control(format!("bad load value `{value}`")))?;
                let rising = load > s.load;
                s.load = load;
                let events = if rising {
                    vec![Event::new("LoadIncrease", SOFTWARE_MODULE, now).with("load", *value)]
                } else {
                    Vec::new()
                };
                Ok((events, format!("load {load}")))
            }
            ("state", []) => Ok((Vec::new(), serde_json::to_string_pretty(&*s).expect("state serializes"))),
            ("inject", _) => Err(EngineError::Control("inject expects <component> <kind>".into())),
            ("load", _) => Err(EngineError::Control("load expects <value>".into())),
            _ => Err(EngineError::Control(format!("unknown command `{verb}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SystemState;
    use std::sync::{Arc, Mutex};

    #[test]
    fn load_increase_emits_an_event() {
        let sys = Arc::new(Mutex::new(SystemState::marketplace()));
        let mut env = SystemEnvironment::new(sys.clone());
        let (ev, _) = env.command("load", &["0.9"], 1.0).unwrap();
        assert_eq!(ev[0].event_type, "LoadIncrease");
        let (ev, _) = env.command("load", &["0.5"], 2.0).unwrap();
        assert!(ev.is_empty());
        assert_eq!(lock(&sys).load, 0.5);
        assert_eq!(env.command("wobble", &[], 0.0).unwrap_err().code(), "E-CONTROL");
    }
}
