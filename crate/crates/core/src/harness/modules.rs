//! Software modules implementing the basic operations of the fixture loops.

use super::system::SystemState;
use crate::error::Result;
use crate::metamodel::ModelSlot;
use crate::reflect::Edit;
use crate::runtime::{Engine, OpCall};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use std::sync::{Arc, Mutex, MutexGuard};

pub type SharedSystem = Arc<Mutex<SystemState>>;

/// Virtual compute time charged by every harness operation.
pub const OP_COST: f64 = 0.01;

pub fn lock(system: &SharedSystem) -> MutexGuard<'_, SystemState> {
    system.lock().unwrap_or_else(|e| e.into_inner())
}

/// Initial body of a model slot, chosen by slot name.
pub fn default_model(_instance: &str, slot: &ModelSlot) -> Value {
    match slot.name.as_str() {
        "TGGRules" => json!({ "rules": ["component2component", "connector2connector"] }),
        "FailureAnalysisRules" => json!({ "failedLifecycle": "failed" }),
        "RepairStrategies" => json!({ "crash": "restart", "oom": "restart", "hang": "restart" }),
        "QueueingModel" => json!({ "threshold": 0.8 }),
        "ParameterVariability" => json!({ "component": "c2", "param": "threadPool", "step": 4, "max": 64 }),
        "UpdateSpec" => json!({ "component": "c5", "version": "2.0" }),
        _ => json!({}),
    }
}

/// Merges the mirror of the software into a fresh architectural model.
pub fn mirror(system: &SystemState) -> Value {
    let mut body = system.projection();
    let obj = body.as_object_mut().expect("projection is an object");
    obj.insert("failures".into(), json!([]));
    obj.insert("rootCauses".into(), json!({}));
    obj.insert("planned".into(), json!([]));
    obj.insert("bottleneck".into(), json!(false));
    body
}

fn obj(v: &mut Value) -> &mut Map<String, Value> {
    if !v.is_object() {
        *v = json!({});
    }
    v.as_object_mut().expect("just made an object")
}

fn push_planned(body: &mut Value, step: Value) {
    let planned = obj(body).entry("planned").or_insert_with(|| json!([]));
    if let Some(list) = planned.as_array_mut() {
        list.push(step);
    }
}

/// Failure kinds of failed components (from the mirror) without a strategy.
pub fn missing_kinds(arch: &Value, strategies: &Value) -> Vec<String> {
    let causes: BTreeSet<String> = arch["rootCauses"]
        .as_object()
        .map(|m| m.values().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_default();
    causes
        .into_iter()
        .filter(|k| strategies.get(k).is_none())
        .collect()
}

/// Strategy synthesized for a failure kind nothing else covers.
pub fn synthesized_action(_kind: &str) -> &'static str {
    "replace"
}

fn with_strategies(strategies: &Value, missing: &[String]) -> Value {
    let mut body = strategies.clone();
    for k in missing {
        obj(&mut body).insert(k.clone(), json!(synthesized_action(k)));
    }
    body
}

fn apply_planned(call: &mut OpCall<'_>, system: &SharedSystem) -> Result<String> {
    let planned = call.read("ArchitecturalModel")?["planned"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    {
        let mut s = lock(system);
        for step in &planned {
            s.apply(step)?;
        }
    }
    if !planned.is_empty() {
        call.annotate("ArchitecturalModel", |b| {
            obj(b).insert("planned".into(), json!([]));
        })?;
    }
    Ok("done".into())
}

/// Registers every harness operation under its software key.
pub fn register_modules(engine: &mut Engine, system: &SharedSystem, cost: f64) {
    for key in ["update", "updateOpt"] {
        let sys = system.clone();
        engine.register_software(key, move |call: &mut OpCall<'_>| {
            call.spend(cost);
            call.read("TGGRules")?;
            let body = mirror(&lock(&sys));
            call.write("ArchitecturalModel", body)?;
            Ok("done".to_string())
        });
    }

    engine.register_software("checkFailures", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let failed_state = call.read("FailureAnalysisRules")?["failedLifecycle"]
            .as_str()
            .unwrap_or("failed")
            .to_string();
        let failures: Vec<String> = call.read("ArchitecturalModel")?["components"]
            .as_object()
            .map(|cs| {
                cs.iter()
                    .filter(|(_, c)| c["lifecycle"] == failed_state.as_str())
                    .map(|(id, _)| id.clone())
                    .collect()
            })
            .unwrap_or_default();
        let exit = if failures.is_empty() { "no_failures" } else { "failures" };
        call.annotate("ArchitecturalModel", |b| {
            obj(b).insert("failures".into(), json!(failures));
        })?;
        Ok(exit.to_string())
    });

    engine.register_software("deepCheck", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        call.read("FailureAnalysisRules")?;
        let arch = call.read("ArchitecturalModel")?;
        let causes: Map<String, Value> = arch["failures"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|id| id.as_str())
            .map(|id| (id.to_string(), arch["components"][id]["failureKind"].clone()))
            .collect();
        call.annotate("ArchitecturalModel", |b| {
            obj(b).insert("rootCauses".into(), Value::Object(causes));
        })?;
        Ok("done".to_string())
    });

    engine.register_software("repair", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let strategies = call.read("RepairStrategies")?.clone();
        let arch = call.read("ArchitecturalModel")?.clone();
        let mut steps = Vec::new();
        let mut uncovered = 0;
        for id in arch["failures"].as_array().into_iter().flatten().filter_map(|v| v.as_str()) {
            let kind = arch["components"][id]["failureKind"].as_str().unwrap_or("crash");
            match strategies.get(kind).and_then(|a| a.as_str()) {
                Some(action) => steps.push(json!({ "component": id, "action": action })),
                None => uncovered += 1,
            }
        }
        let exit = if uncovered == 0 && !steps.is_empty() { "planned" } else { "no_strategy" };
        call.annotate("ArchitecturalModel", |b| {
            for s in steps {
                push_planned(b, s);
            }
        })?;
        Ok(exit.to_string())
    });

    for key in ["effect", "effectParams"] {
        let sys = system.clone();
        engine.register_software(key, move |call: &mut OpCall<'_>| {
            call.spend(cost);
            apply_planned(call, &sys)
        });
    }

    engine.register_software("analyzeBottleneck", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let threshold = call.read("QueueingModel")?["threshold"].as_f64().unwrap_or(0.8);
        let load = call.read("ArchitecturalModel")?["load"].as_f64().unwrap_or(0.0);
        let bottleneck = load > threshold;
        call.annotate("ArchitecturalModel", |b| {
            obj(b).insert("bottleneck".into(), json!(bottleneck));
        })?;
        Ok(if bottleneck { "bottleneck" } else { "no_bottleneck" }.to_string())
    });

    engine.register_software("planParams", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let pv = call.read("ParameterVariability")?.clone();
        let id = pv["component"].as_str().unwrap_or("c2").to_string();
        let param = pv["param"].as_str().unwrap_or("threadPool").to_string();
        let current = call.read("ArchitecturalModel")?["components"][&id]["params"][&param]
            .as_i64()
            .unwrap_or(0);
        let value = (current + pv["step"].as_i64().unwrap_or(1)).min(pv["max"].as_i64().unwrap_or(i64::MAX));
        call.annotate("ArchitecturalModel", |b| {
            push_planned(b, json!({ "component": id, "action": "set", "param": param, "value": value }));
        })?;
        Ok("planned".to_string())
    });

    engine.register_software("checkStrategies", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let target = call.reflected("feedbackLoopModel")?;
        let arch = call.reflected_model(&target, "ArchitecturalModel")?;
        let strategies = call.reflected_model(&target, "RepairStrategies")?;
        let missing = missing_kinds(&arch, &strategies);
        Ok(if missing.is_empty() { "adequate" } else { "missing" }.to_string())
    });

    engine.register_software("synthesizeStrategies", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let target = call.reflected("feedbackLoopModel")?;
        let arch = call.reflected_model(&target, "ArchitecturalModel")?;
        let strategies = call.reflected_model(&target, "RepairStrategies")?;
        let body = with_strategies(&strategies, &missing_kinds(&arch, &strategies));
        call.edit(
            &target,
            Edit::ReplaceModel {
                slot: "RepairStrategies".into(),
                body,
            },
        )?;
        Ok("done".to_string())
    });

    engine.register_software("monitorLoop", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let target = call.reflected("feedbackLoopModel")?;
        let view = call.query(&target)?;
        let arch = call.reflected_model(&target, "ArchitecturalModel")?;
        let body = json!({
            "instance": target,
            "runCount": view.run_count,
            "lastFinalState": view.last_final_state,
            "strategies": call.reflected_model(&target, "RepairStrategies")?,
            "rootCauses": arch["rootCauses"],
        });
        call.write("LoopReflection", body)?;
        Ok("done".to_string())
    });

    engine.register_software("analyzeSuccess", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let r = call.read("LoopReflection")?.clone();
        let missing = missing_kinds(&r, &r["strategies"]);
        let exit = if missing.is_empty() { "adequate" } else { "missing" };
        call.annotate("LoopReflection", |b| {
            obj(b).insert("missing".into(), json!(missing));
        })?;
        Ok(exit.to_string())
    });

    engine.register_software("planStrategies", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let add: Map<String, Value> = call.read("LoopReflection")?["missing"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|k| k.as_str())
            .map(|k| (k.to_string(), json!(synthesized_action(k))))
            .collect();
        call.write("StrategyChanges", json!({ "add": add }))?;
        Ok("done".to_string())
    });

    engine.register_software("enactStrategies", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let changes = call.read("StrategyChanges")?["add"].clone();
        let target = call.reflected("feedbackLoopModel")?;
        let mut body = call.reflected_model(&target, "RepairStrategies")?;
        for (k, v) in changes.as_object().into_iter().flatten() {
            obj(&mut body).insert(k.clone(), v.clone());
        }
        call.edit(
            &target,
            Edit::ReplaceModel {
                slot: "RepairStrategies".into(),
                body,
            },
        )?;
        Ok("done".to_string())
    });

    engine.register_software("createModel", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let spec = call.read("UpdateSpec")?.clone();
        let id = spec["component"]
            .as_str()
            .ok_or_else(|| call.fail("update specification names no component"))?
            .to_string();
        call.write(
            "Reconfiguration",
            json!({ "component": id, "action": "replace", "version": spec["version"] }),
        )?;
        Ok("done".to_string())
    });

    let sys = system.clone();
    engine.register_software("reconfigure", move |call: &mut OpCall<'_>| {
        call.spend(cost);
        let step = call.read("Reconfiguration")?.clone();
        lock(&sys).apply(&step).map_err(|e| call.fail(e.to_string()))?;
        Ok("done".to_string())
    });
}

/// Keys registered by [`register_modules`].
pub const SOFTWARE_KEYS: [&str; 17] = [
    "update",
    "checkFailures",
    "deepCheck",
    "repair",
    "effect",
    "effectParams",
    "analyzeBottleneck",
    "planParams",
    "checkStrategies",
    "synthesizeStrategies",
    "monitorLoop",
    "analyzeSuccess",
    "planStrategies",
    "enactStrategies",
    "createModel",
    "reconfigure",
    "updateOpt",
];
