//! Decision-condition language over execution history.

mod ast;
mod eval;
mod history;
mod parse;

pub use ast::{Atom, CmpOp, ConditionExpr, Operand};
pub use eval::{atom_value, eval_condition};
pub use history::{ExecutionHistory, OpExecution, RunRecord, ABORTED_STATE};
pub use parse::{parse_condition, ConditionError};
