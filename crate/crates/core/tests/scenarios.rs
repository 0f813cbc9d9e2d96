mod common;

use common::oracle::pair;
use megaloop::control::ControlResponse;
use megaloop::dsl::{parse_ld, parse_patch, serialize_ld};
use megaloop::fixtures;
use megaloop::harness::{Lifecycle, Scenario};
use megaloop::reflect::{MegamodelSource, Patch, PatchStep, Snapshot};
use megaloop::runtime::RunResult;

fn runs_of<'a>(s: &'a Scenario, instance: &'a str) -> impl Iterator<Item = &'a RunResult> + 'a {
    s.engine.results().iter().filter(move |r| r.instance == instance)
}

fn ops(r: &RunResult) -> Vec<String> {
    r.op_sequence().into_iter().map(|(op, _)| op).collect()
}

#[test]
fn one_crash_is_repaired_once() {
    let mut s = Scenario::fixture("self-repair.ld").unwrap();
    s.run_script_text(fixtures::script("one-crash.script"), Some(3.0)).unwrap();
    let runs: Vec<_> = runs_of(&s, "selfRepair").collect();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].start_time, 1.0);
    assert_eq!(runs[0].final_state, "Executed");
    let repairs = runs[0].op_sequence().iter().filter(|(op, _)| op == "Repair").count();
    assert_eq!(repairs, 1);
    assert_eq!(s.system().components["c3"].lifecycle, Lifecycle::Started);
    assert_eq!(s.system().reconfigurations, 1);
}

#[test]
fn modular_and_flat_loops_agree() {
    let script = "at 1s inject c3 crash\nat 2s inject c4 poison\nevery 0.25s from 2.1s until 5s request\n";
    let mut flat = Scenario::fixture("self-repair-flat.ld").unwrap();
    let mut modular = Scenario::fixture("self-repair.ld").unwrap();
    flat.run_script_text(script, Some(6.0)).unwrap();
    modular.run_script_text(script, Some(6.0)).unwrap();
    let basic = |s: &Scenario| -> Vec<Vec<(String, String)>> {
        runs_of(s, "selfRepair")
            .map(|r| r.op_sequence().into_iter().filter(|(op, _)| op != "Analyze").collect())
            .collect()
    };
    assert_eq!(basic(&flat), basic(&modular));
    assert!(basic(&flat).iter().any(|r| r.contains(&pair("DeepCheck", "done"))));
}

#[test]
fn novel_failure_is_cured_by_synthesized_strategy() {
    let mut s = Scenario::fixture("self-repair-strategies.ld").unwrap();
    s.run_script_text(fixtures::script("novel-failure.script"), Some(5.0)).unwrap();
    let strat = s.engine.instance("strategies").unwrap().history.runs();
    assert_eq!(strat.len(), 1, "strategies ran once");
    assert_eq!(strat[0].final_state, "Adapted");
    assert_eq!(runs_of(&s, "strategies").count(), 0, "only as an interception");
    let body = s.engine.model_body("selfRepair", "RepairStrategies").unwrap();
    assert_eq!(body["poison"], "replace");
    assert_eq!(s.system().components["c3"].lifecycle, Lifecycle::Started);
    assert_eq!(s.system().components["c3"].version, "2.0");
    assert!(s.engine.run_errors().is_empty());
}

#[test]
fn update_module_runs_once_and_disappears() {
    let mut s = Scenario::fixture("self-repair.ld").unwrap();
    s.run_script_text(fixtures::script("update-software.script"), Some(4.0)).unwrap();
    let updater: Vec<_> = runs_of(&s, "updater").collect();
    assert_eq!(updater.len(), 1);
    assert!(updater[0].destructed);
    assert_eq!(ops(updater[0]), ["CreateModel", "Reconfigure"]);
    assert_eq!(s.system().components["c5"].version, "2.0");
    assert!(s.engine.instance("updater").is_none());
    let list = s.outcomes.last().unwrap();
    assert!(list.response.is_ok());
    assert!(!list.response.payload().contains("updater"), "{}", list.response.payload());
    assert!(list.response.payload().contains("selfRepair"));
}

#[test]
fn patch_during_flood_respects_quiescence() {
    let mut s = Scenario::fixture("self-repair.ld").unwrap();
    s.run_script_text(fixtures::script("flood.script"), Some(60.0)).unwrap();
    let audit = s.engine.audit();
    assert!(audit.runs.len() > 100);
    assert_eq!(audit.aborted_runs(), 0);
    assert!(audit.quiescence_violations().is_empty());
    let patched = s.outcomes.iter().find(|o| o.line.starts_with("patch")).unwrap();
    assert!(patched.response.is_ok(), "{:?}", patched.response);
    let golden = parse_ld(fixtures::ld("self-repair-strategies.ld")).unwrap();
    assert_eq!(parse_ld(&serialize_ld(s.engine.architecture())).unwrap(), golden);
}

fn sm1_run(script: &str) -> RunResult {
    let mut s = Scenario::fixture("self-management-1.ld").unwrap();
    s.run_script_text(script, Some(2.0)).unwrap();
    let runs: Vec<_> = runs_of(&s, "selfManagement").cloned().collect();
    assert_eq!(runs.len(), 1);
    runs.into_iter().next().unwrap()
}

fn updates_by(r: &RunResult) -> Vec<String> {
    r.trace
        .iter()
        .filter(|e| e.name == "Update" && e.kind == megaloop::runtime::TraceKind::OpEnd)
        .map(|e| e.instance.clone())
        .collect()
}

#[test]
fn repair_analyzed_continues_optimization_at_analyze() {
    let r = sm1_run("at 1s emit RtException mRUBiS\n");
    let seq = r.op_sequence();
    assert!(seq.contains(&pair("Repair", "Analyzed")));
    assert_eq!(updates_by(&r), ["selfRepair"]);
    assert!(seq.contains(&pair("AnalyzeBottleneck", "no_bottleneck")));
}

#[test]
fn repair_executed_restarts_optimization_at_monitor() {
    let r = sm1_run("at 1s inject c2 crash\n");
    assert!(r.op_sequence().contains(&pair("Repair", "Executed")));
    assert_eq!(updates_by(&r), ["selfRepair", "selfOptimization"]);
}

#[test]
fn shared_effect_runs_iff_something_was_planned() {
    for crash in [false, true] {
        for load in [false, true] {
            let mut s = Scenario::fixture("self-management-2.ld").unwrap();
            let mut script = String::new();
            if crash {
                script.push_str("at 1s inject c3 crash\n");
            }
            if load {
                script.push_str("at 1s load 0.9\n");
            }
            if !crash && !load {
                script.push_str("at 1s emit RtException mRUBiS\n");
            }
            s.run_script_text(&script, Some(2.0)).unwrap();
            let runs: Vec<_> = runs_of(&s, "selfManagement").collect();
            assert_eq!(runs.len(), 1, "crash={crash} load={load}");
            let seq = runs[0].op_sequence();
            let planned = |op: &str| seq.contains(&pair(op, "Planned"));
            assert_eq!(planned("RepairAP"), crash);
            assert_eq!(planned("OptimizationAP"), load);
            let effect = seq.iter().any(|(op, _)| op == "Effect");
            assert_eq!(effect, crash || load, "crash={crash} load={load}: {seq:?}");
            assert_eq!(runs[0].final_state, if crash || load { "Executed" } else { "Analyzed" });
        }
    }
}

#[test]
fn snapshot_round_trip_is_byte_stable() {
    let mut s = Scenario::fixture("self-repair-strategies.ld").unwrap();
    s.run_script_text(fixtures::script("novel-failure.script"), Some(5.0)).unwrap();
    let first = s.engine.export_snapshot().unwrap();
    let text = first.to_json();

    let mut t = Scenario::fixture("self-repair.ld").unwrap();
    t.engine.import_snapshot(&Snapshot::from_json(&text).unwrap()).unwrap();
    let mut second = t.engine.export_snapshot().unwrap();
    second.engine_time = first.engine_time;
    assert_eq!(second.to_json(), text);
    assert!(t.engine.instance("strategies").is_some());
    assert_eq!(
        t.engine.model_body("selfRepair", "RepairStrategies").unwrap()["poison"],
        "replace"
    );
}

#[test]
fn rebind_checks_signatures() {
    let mut s = Scenario::fixture("self-repair.ld").unwrap();
    let bad = s.exec("rebind selfRepair.Analyze selfRepair", false);
    assert!(!bad.is_ok());
    let mut patch = parse_patch(fixtures::patch("rebind-analysis.patch")).unwrap();
    megaloop::dsl::resolve_patch_sources(&mut patch, &|rel| {
        Ok(std::fs::read_to_string(fixtures::fixture_dir().join("patch").join(rel))?)
    })
    .unwrap();
    s.engine.apply_patch(&patch).unwrap();
    assert_eq!(s.engine.architecture().use_edge("selfRepair", "Analyze").unwrap().target, "selfRepairA2");
    let back = s.exec("rebind selfRepair.Analyze selfRepairA", false);
    assert!(back.is_ok(), "{back:?}");
}

#[test]
fn signature_mismatch_is_reported() {
    let mut s = Scenario::fixture("self-management-1.ld").unwrap();
    match s.exec("rebind selfManagement.Optimize selfRepair", false) {
        ControlResponse::Error { code, .. } => assert_eq!(code, "E-SIG-MISMATCH"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn failed_patch_leaves_nothing_behind() {
    let mut s = Scenario::fixture("self-repair.ld").unwrap();
    let before = serialize_ld(s.engine.architecture());
    let instances = s.engine.instances().count();
    let registry: Vec<String> = s.engine.registry().keys().cloned().collect();
    let patch = Patch::new("Broken")
        .step(PatchStep::LoadMegamodel(MegamodelSource::Inline(
            megaloop::dsl::parse_fld(fixtures::fld("self-repair-strategies.fld")).unwrap(),
        )))
        .step(PatchStep::AddLayer { index: 2, name: "Layer-2".into() })
        .step(PatchStep::AddModule {
            layer: 2,
            instance: "strategies".into(),
            megamodel: "Self-repair-strategies".into(),
        })
        .step(PatchStep::BindUse {
            module: "strategies".into(),
            op: "CheckStrategies".into(),
            target: "checkStrategies".into(),
        });
    let err = s.engine.apply_patch(&patch).unwrap_err();
    assert!(err.code().starts_with("E-"), "{err}");
    assert_eq!(serialize_ld(s.engine.architecture()), before);
    assert_eq!(s.engine.instances().count(), instances);
    assert_eq!(s.engine.registry().keys().cloned().collect::<Vec<_>>(), registry);
    assert!(s.engine.audit().mutations.is_empty());
}

#[test]
fn control_channel_answers_in_frames() {
    let mut s = Scenario::fixture("self-repair.ld").unwrap();
    let time = s.exec("time", true);
    assert_eq!(time, ControlResponse::Ok("0.000000".into()));
    let list = s.exec("list", true);
    assert!(list.payload().contains("module selfRepair"));
    let run = s.exec("run selfRepair Monitor", true);
    assert_eq!(run.payload(), "selfRepair Monitor -> Analyzed");
    let query = s.exec("query selfRepair", true);
    let view: serde_json::Value = serde_json::from_str(query.payload()).unwrap();
    assert_eq!(view["runCount"], 1);
    match s.exec("query nobody", true) {
        ControlResponse::Error { code, .. } => assert_eq!(code, "E-NO-INSTANCE"),
        other => panic!("{other:?}"),
    }
    assert!(!s.exec("inject c99 crash", true).is_ok());
}
