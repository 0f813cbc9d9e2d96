//! Textual syntax for megamodels, layer diagrams, patches and event types.

mod events;
mod fld;
mod ld;
mod lexer;
mod patch;

pub use events::{parse_events, parse_events_file, serialize_events};
pub use fld::{parse_fld, parse_fld_file, parse_fld_unchecked, serialize_fld};
pub use ld::{parse_ld, parse_ld_file, parse_ld_unchecked, serialize_ld, serialize_ld_annotated};
pub use lexer::quote;
pub use patch::{parse_patch, parse_patch_file, resolve_patch_sources, serialize_patch};
