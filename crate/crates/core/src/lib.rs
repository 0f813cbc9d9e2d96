//! Interpreter and runtime for executable feedback-loop megamodels.
//!
//! Feedback loops are described as megamodels (`.fld` files) and composed into
//! a layered architecture (`.ld` files). The [`runtime::Engine`] executes module
//! instances, schedules them through event/period triggers and applies
//! structural changes at quiescent points.

pub mod bench;
pub mod condition;
pub mod control;
pub mod diag;
pub mod dsl;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod metamodel;
pub mod reflect;
pub mod runtime;
pub mod trigger;
pub mod validate;

pub use diag::{Diagnostic, Severity};
pub use error::{EngineError, Result};
