//! Mock operations with a fixed compute time, and the hand-coded loop that
//! calls them without any interpreter structures.

use super::cpu::burn_cpu;
use crate::error::Result;
use crate::runtime::{Engine, OpCall};
use serde_json::{json, Value};
use std::hint::black_box;
use std::sync::{Arc, Mutex};

/// Software keys, operation names and exits of the five mocks.
pub const MOCKS: [(&str, &str, &str); 5] = [
    ("update", "Update", "done"),
    ("checkFailures", "CheckForFailures", "failures"),
    ("deepCheck", "DeepCheck", "done"),
    ("repair", "Repair", "planned"),
    ("effect", "Effect", "done"),
];

pub type OpLog = Arc<Mutex<Vec<(&'static str, &'static str)>>>;

/// Body given to every runtime model; mocks only read it.
pub fn mock_model(slot: &str) -> Value {
    json!({ "slot": slot, "elements": (0..16).collect::<Vec<_>>() })
}

#[derive(Clone)]
pub struct Mock {
    pub op: &'static str,
    pub exit: &'static str,
    compute: f64,
    log: OpLog,
}

impl Mock {
    /// Touches the input models, burns the compute time and logs the call.
    pub fn work(&self, models: &[&Value]) -> &'static str {
        for m in models {
            black_box(m["elements"].as_array().map_or(0, Vec::len));
        }
        burn_cpu(self.compute);
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push((self.op, self.exit));
        self.exit
    }
}

pub fn mocks(compute_seconds: f64, log: &OpLog) -> Vec<Mock> {
    MOCKS
        .iter()
        .map(|(_, op, exit)| Mock {
            op,
            exit,
            compute: compute_seconds,
            log: log.clone(),
        })
        .collect()
}

/// Binds each mock under its software key; inputs are the declared models.
pub fn register_mocks(engine: &mut Engine, mocks: &[Mock]) {
    for ((key, _, _), mock) in MOCKS.iter().zip(mocks) {
        let mock = mock.clone();
        engine.register_software(key, move |call: &mut OpCall<'_>| -> Result<String> {
            let mut models = Vec::with_capacity(call.operation().usages.len());
            for u in &call.operation().usages {
                models.push(call.read(&u.slot)?);
            }
            Ok(mock.work(&models).to_string())
        });
    }
}

/// The self-repair loop hard-coded: same mocks, same decision, no megamodel.
pub struct Baseline {
    mocks: Vec<Mock>,
    architectural: Value,
    tgg: Value,
    analysis: Value,
    strategies: Value,
    runs: u64,
    last_healthy: Option<u64>,
}

impl Baseline {
    pub fn new(mocks: Vec<Mock>) -> Self {
        Self {
            mocks,
            architectural: mock_model("ArchitecturalModel"),
            tgg: mock_model("TGGRules"),
            analysis: mock_model("FailureAnalysisRules"),
            strategies: mock_model("RepairStrategies"),
            runs: 0,
            last_healthy: None,
        }
    }

    pub fn run_once(&mut self) {
        self.runs += 1;
        let [update, check, deep, repair, effect] = &self.mocks[..] else {
            unreachable!("five mocks")
        };
        update.work(&[&self.tgg, &self.architectural]);
        if check.work(&[&self.analysis, &self.architectural]) == "no_failures" {
            self.last_healthy = Some(self.runs);
            return;
        }
        let since = self.last_healthy.map_or(u64::MAX, |h| self.runs - h);
        if since > 5 && self.runs > 5 {
            deep.work(&[&self.analysis, &self.architectural]);
        }
        repair.work(&[&self.strategies, &self.architectural]);
        effect.work(&[&self.architectural, &self.tgg]);
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }
}
