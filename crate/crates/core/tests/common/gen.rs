//! Generators: valid-by-construction megamodels, histories and conditions.

use megaloop::condition::{Atom, CmpOp, ConditionExpr, ExecutionHistory, OpExecution, Operand};
use megaloop::metamodel::{
    Activity, Branch, ControlState, DecisionNode, Endpoint, FlowEdge, Guard, Megamodel, ModelSlot,
    ModelStereotype, ModelUsage, Operation, OperationKind, StateKind, UsageKind,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const DISPLAYS: [&str; 6] = [
    "Architectural \"model\"",
    "back\\slash",
    "tab\there",
    "two\nlines",
    "Überwachung ✓",
    "plain words",
];

fn display(rng: &mut impl Rng) -> Option<String> {
    rng.gen_bool(0.5).then(|| DISPLAYS.choose(rng).expect("non-empty").to_string())
}

fn literal(rng: &mut impl Rng) -> f64 {
    *[0.0, 1.0, 2.0, 5.0, 0.5, 12.25].choose(rng).expect("non-empty")
}

fn random_atom(rng: &mut impl Rng, ops: &[Operation]) -> Atom {
    let op = ops.choose(rng).expect("at least one operation");
    let exit = op.exits.choose(rng).expect("operations have exits").clone();
    match rng.gen_range(0..4) {
        0 => Atom::Executions {
            op: op.name.clone(),
            exit: rng.gen_bool(0.5).then_some(exit),
        },
        1 => Atom::RunsSince { op: op.name.clone(), exit },
        2 => Atom::SecondsSince {
            op: op.name.clone(),
            exit: rng.gen_bool(0.5).then_some(exit),
        },
        _ => Atom::RunCount,
    }
}

fn random_condition(rng: &mut impl Rng, ops: &[Operation], depth: u32) -> ConditionExpr {
    let ops_cmp = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt];
    if depth == 0 || rng.gen_bool(0.4) {
        let lhs = Operand::Atom(random_atom(rng, ops));
        let rhs = if rng.gen_bool(0.7) {
            Operand::Literal(literal(rng))
        } else {
            Operand::Atom(random_atom(rng, ops))
        };
        return ConditionExpr::Compare {
            lhs,
            op: *ops_cmp.choose(rng).expect("non-empty"),
            rhs,
        };
    }
    let pick = rng.gen_range(0..3);
    let a = Box::new(random_condition(rng, ops, depth - 1));
    if pick == 2 {
        return ConditionExpr::Not(a);
    }
    let b = Box::new(random_condition(rng, ops, depth - 1));
    if pick == 0 {
        ConditionExpr::And(a, b)
    } else {
        ConditionExpr::Or(a, b)
    }
}

/// A megamodel that passes every error rule (warnings are possible).
pub fn random_megamodel(rng: &mut impl Rng, index: usize) -> Megamodel {
    let mut m = Megamodel::new(&format!("M{index} \"random\" loop"));

    for j in 0..rng.gen_range(0..4) {
        let megamodel_ref = rng.gen_bool(0.2);
        let stereotype = if megamodel_ref {
            rng.gen_bool(0.5).then_some(ModelStereotype::ReflectionModel)
        } else {
            rng.gen_bool(0.7).then(|| *ModelStereotype::ALL.choose(rng).expect("non-empty"))
        };
        m.models.push(ModelSlot {
            name: format!("S{j}"),
            display: display(rng),
            stereotype,
            megamodel_ref,
        });
    }

    let n_initial = rng.gen_range(1..3);
    let n_final = rng.gen_range(1..4);
    for i in 0..n_initial {
        m.states.push(ControlState {
            name: format!("I{i}"),
            kind: StateKind::Initial,
            destruction: false,
        });
    }
    for i in 0..n_final {
        m.states.push(ControlState {
            name: format!("F{i}"),
            kind: StateKind::Final,
            destruction: rng.gen_bool(0.2),
        });
    }
    m.states.shuffle(rng);

    let n_ops = rng.gen_range(1..6);
    for i in 0..n_ops {
        let complex = rng.gen_bool(0.3);
        let entries = if complex {
            (0..rng.gen_range(0..4)).map(|e| format!("e{e}")).collect()
        } else {
            Vec::new()
        };
        let mut slots: Vec<&ModelSlot> = m.models.iter().collect();
        slots.shuffle(rng);
        let usages = slots
            .iter()
            .take(rng.gen_range(0..=slots.len()))
            .map(|s| ModelUsage {
                kind: *UsageKind::ALL.choose(rng).expect("non-empty"),
                slot: s.name.clone(),
            })
            .collect();
        m.operations.push(Operation {
            name: format!("Op{i}"),
            display: display(rng),
            kind: if complex { OperationKind::Complex } else { OperationKind::Basic },
            stereotype: rng.gen_bool(0.6).then(|| *Activity::ALL.choose(rng).expect("non-empty")),
            entries,
            exits: (0..rng.gen_range(1..4)).map(|x| format!("x{x}")).collect(),
            usages,
        });
    }

    let n_decisions = rng.gen_range(0..3);
    let decision_names: Vec<String> = (0..n_decisions).map(|d| format!("D{d}")).collect();

    let op_targets = |ops: &[Operation]| -> Vec<Endpoint> {
        let mut out = Vec::new();
        for op in ops {
            if op.entries.len() <= 1 {
                out.push(Endpoint::element(&op.name));
            }
            for e in &op.entries {
                out.push(Endpoint::compartment(&op.name, e));
            }
        }
        out
    };
    let finals: Vec<Endpoint> = (0..n_final).map(|i| Endpoint::element(&format!("F{i}"))).collect();
    let mut plain: Vec<Endpoint> = op_targets(&m.operations);
    plain.extend(finals.iter().cloned());
    let mut any = plain.clone();
    any.extend(decision_names.iter().map(|d| Endpoint::element(d)));

    for i in 0..n_initial {
        let target = op_targets(&m.operations[..1]).choose(rng).expect("op0 is a target").clone();
        let target = if i == 0 { target } else { any.choose(rng).expect("non-empty").clone() };
        m.flows.push(FlowEdge {
            source: Endpoint::element(&format!("I{i}")),
            target,
        });
    }
    for (i, op) in m.operations.iter().enumerate() {
        for (k, exit) in op.exits.iter().enumerate() {
            let target = match (k, m.operations.get(i + 1)) {
                (0, Some(next)) => op_targets(std::slice::from_ref(next))
                    .choose(rng)
                    .expect("every op is a target")
                    .clone(),
                (0, None) if n_decisions > 0 => Endpoint::element("D0"),
                _ => any.choose(rng).expect("non-empty").clone(),
            };
            m.flows.push(FlowEdge {
                source: Endpoint::compartment(&op.name, exit),
                target,
            });
        }
    }
    m.flows.shuffle(rng);

    for name in decision_names {
        let mut branches: Vec<Branch> = (0..rng.gen_range(0..3))
            .map(|_| Branch {
                guard: Guard::When(random_condition(rng, &m.operations, 2)),
                target: plain.choose(rng).expect("non-empty").clone(),
            })
            .collect();
        branches.push(Branch {
            guard: Guard::Else,
            target: finals.choose(rng).expect("non-empty").clone(),
        });
        m.decisions.push(DecisionNode { name, branches });
    }
    m
}

pub const HIST_OPS: [&str; 3] = ["A", "B", "C"];
pub const HIST_EXITS: [&str; 2] = ["x", "y"];

/// One generated run: aborted flag and `(op, exit, duration)` steps.
pub type GenRun = (bool, Vec<(usize, usize, u8)>);

pub fn gen_run() -> impl Strategy<Value = GenRun> {
    (
        prop::bool::weighted(0.15),
        prop::collection::vec((0..HIST_OPS.len(), 0..HIST_EXITS.len(), 0u8..4), 0..5),
    )
}

/// Completed runs, plus an optional in-flight run.
pub fn gen_history() -> impl Strategy<Value = (Vec<GenRun>, Option<Vec<(usize, usize, u8)>>)> {
    (
        prop::collection::vec(gen_run(), 0..12),
        prop::option::of(prop::collection::vec((0..HIST_OPS.len(), 0..HIST_EXITS.len(), 0u8..4), 0..4)),
    )
}

/// Replays a generated history; time advances by each step's duration in tenths.
pub fn build_history(runs: &[GenRun], current: &Option<Vec<(usize, usize, u8)>>) -> (ExecutionHistory, f64) {
    let mut h = ExecutionHistory::new();
    let mut t = 0.0;
    let play = |h: &mut ExecutionHistory, steps: &[(usize, usize, u8)], t: &mut f64| {
        h.begin_run("Start", *t);
        for &(op, exit, d) in steps {
            let start = *t;
            *t += f64::from(d) / 10.0;
            h.record_op(OpExecution {
                op: HIST_OPS[op].into(),
                exit: HIST_EXITS[exit].into(),
                start_time: start,
                end_time: *t,
            });
        }
    };
    for (aborted, steps) in runs {
        play(&mut h, steps, &mut t);
        if *aborted {
            h.abort_run(t);
        } else {
            h.finish_run("Done", t);
        }
        t += 0.5;
    }
    if let Some(steps) = current {
        play(&mut h, steps, &mut t);
    }
    (h, t + 0.25)
}

fn gen_atom() -> impl Strategy<Value = Atom> {
    let op = prop::sample::select(HIST_OPS.to_vec()).prop_map(String::from);
    let exit = prop::sample::select(HIST_EXITS.to_vec()).prop_map(String::from);
    prop_oneof![
        (op.clone(), prop::option::of(exit.clone())).prop_map(|(op, exit)| Atom::Executions { op, exit }),
        (op.clone(), exit.clone()).prop_map(|(op, exit)| Atom::RunsSince { op, exit }),
        (op, prop::option::of(exit)).prop_map(|(op, exit)| Atom::SecondsSince { op, exit }),
        Just(Atom::RunCount),
    ]
}

fn gen_operand() -> impl Strategy<Value = Operand> {
    prop_oneof![
        prop::sample::select(vec![0.0, 1.0, 2.0, 3.0, 5.0, 0.5, 1.5]).prop_map(Operand::Literal),
        gen_atom().prop_map(Operand::Atom),
    ]
}

pub fn gen_condition() -> impl Strategy<Value = ConditionExpr> {
    let cmp = prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt]);
    let leaf = (gen_operand(), cmp, gen_operand()).prop_map(|(lhs, op, rhs)| ConditionExpr::Compare { lhs, op, rhs });
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ConditionExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ConditionExpr::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|a| ConditionExpr::Not(Box::new(a))),
        ]
    })
}
