use super::ast::{Atom, ConditionExpr, Operand};
use super::history::ExecutionHistory;

/// Numeric value of a history atom; `f64::INFINITY` when the event never happened.
pub fn atom_value(atom: &Atom, history: &ExecutionHistory, now: f64) -> f64 {
    match atom {
        Atom::Executions { op, exit } => history.executions(op, exit.as_deref()) as f64,
        Atom::RunsSince { op, exit } => history.runs_since(op, exit),
        Atom::SecondsSince { op, exit } => history.seconds_since(op, exit.as_deref(), now),
        Atom::RunCount => history.run_count() as f64,
    }
}

fn operand_value(operand: &Operand, history: &ExecutionHistory, now: f64) -> f64 {
    match operand {
        Operand::Literal(v) => *v,
        Operand::Atom(a) => atom_value(a, history, now),
    }
}

pub fn eval_condition(expr: &ConditionExpr, history: &ExecutionHistory, now: f64) -> bool {
    match expr {
        ConditionExpr::Compare { lhs, op, rhs } => {
            op.apply(operand_value(lhs, history, now), operand_value(rhs, history, now))
        }
        ConditionExpr::And(a, b) => {
            eval_condition(a, history, now) && eval_condition(b, history, now)
        }
        ConditionExpr::Or(a, b) => eval_condition(a, history, now) || eval_condition(b, history, now),
        ConditionExpr::Not(a) => !eval_condition(a, history, now),
    }
}
