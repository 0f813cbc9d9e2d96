//! Reference implementations written from the definitions, without indexes.

use megaloop::condition::{Atom, CmpOp, ConditionExpr, Operand, RunRecord};
use std::collections::BTreeMap;

/// Runs visible to conditions: completed non-aborted runs, then the in-flight one.
pub struct NaiveHistory<'a> {
    pub visible: Vec<&'a RunRecord>,
}

impl<'a> NaiveHistory<'a> {
    pub fn new(runs: &'a [RunRecord], current: Option<&'a RunRecord>) -> Self {
        let mut visible: Vec<&RunRecord> = runs.iter().filter(|r| !r.is_aborted()).collect();
        visible.extend(current);
        Self { visible }
    }

    fn matches(op: &str, exit: Option<&str>, x_op: &str, x_exit: &str) -> bool {
        x_op == op && exit.map_or(true, |e| e == x_exit)
    }

    pub fn run_count(&self) -> f64 {
        self.visible.len() as f64
    }

    pub fn executions(&self, op: &str, exit: Option<&str>) -> f64 {
        self.visible
            .iter()
            .flat_map(|r| &r.op_executions)
            .filter(|x| Self::matches(op, exit, &x.op, &x.exit))
            .count() as f64
    }

    pub fn runs_since(&self, op: &str, exit: &str) -> f64 {
        let n = self.visible.len();
        self.visible
            .iter()
            .rposition(|r| r.op_executions.iter().any(|x| Self::matches(op, Some(exit), &x.op, &x.exit)))
            .map_or(f64::INFINITY, |i| (n - 1 - i) as f64)
    }

    pub fn seconds_since(&self, op: &str, exit: Option<&str>, now: f64) -> f64 {
        self.visible
            .iter()
            .flat_map(|r| &r.op_executions)
            .filter(|x| Self::matches(op, exit, &x.op, &x.exit))
            .last()
            .map_or(f64::INFINITY, |x| now - x.end_time)
    }

    pub fn atom(&self, atom: &Atom, now: f64) -> f64 {
        match atom {
            Atom::Executions { op, exit } => self.executions(op, exit.as_deref()),
            Atom::RunsSince { op, exit } => self.runs_since(op, exit),
            Atom::SecondsSince { op, exit } => self.seconds_since(op, exit.as_deref(), now),
            Atom::RunCount => self.run_count(),
        }
    }

    pub fn eval(&self, expr: &ConditionExpr, now: f64) -> bool {
        match expr {
            ConditionExpr::Compare { lhs, op, rhs } => {
                let v = |o: &Operand| match o {
                    Operand::Literal(x) => *x,
                    Operand::Atom(a) => self.atom(a, now),
                };
                let (a, b) = (v(lhs), v(rhs));
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Gt => a > b,
                }
            }
            ConditionExpr::And(a, b) => self.eval(a, now) && self.eval(b, now),
            ConditionExpr::Or(a, b) => self.eval(a, now) || self.eval(b, now),
            ConditionExpr::Not(a) => !self.eval(a, now),
        }
    }
}

/// Kinds the default repair strategies cover.
pub const COVERED: [&str; 3] = ["crash", "oom", "hang"];

/// The modular self-repair loop written out by hand: which operations run,
/// with which exits, given the failed components.
#[derive(Debug, Default, Clone)]
pub struct SelfRepairOracle {
    pub failed: BTreeMap<String, String>,
    pub runs: u64,
    pub last_healthy: Option<u64>,
}

impl SelfRepairOracle {
    pub fn inject(&mut self, id: &str, kind: &str) {
        self.failed.insert(id.to_string(), kind.to_string());
    }

    pub fn replace(&mut self, id: &str) {
        self.failed.remove(id);
    }

    /// Whether a failing run `n` takes the deep check.
    pub fn deep_check(&self, n: u64) -> bool {
        let since = self.last_healthy.map_or(u64::MAX, |h| n - h);
        since > 5 && n > 5
    }

    pub fn run(&mut self) -> Vec<(String, String)> {
        self.runs += 1;
        let n = self.runs;
        let mut seq = vec![pair("Update", "done")];
        if self.failed.is_empty() {
            self.last_healthy = Some(n);
            seq.push(pair("CheckForFailures", "no_failures"));
            seq.push(pair("Analyze", "OK"));
            return seq;
        }
        seq.push(pair("CheckForFailures", "failures"));
        if self.deep_check(n) {
            seq.push(pair("DeepCheck", "done"));
        }
        seq.push(pair("Analyze", "Failures"));
        let all_covered = self.failed.values().all(|k| COVERED.contains(&k.as_str()));
        seq.push(pair("Repair", if all_covered { "planned" } else { "no_strategy" }));
        seq.push(pair("Effect", "done"));
        self.failed.retain(|_, k| !COVERED.contains(&k.as_str()));
        seq
    }
}

pub fn pair(op: &str, exit: &str) -> (String, String) {
    (op.to_string(), exit.to_string())
}
