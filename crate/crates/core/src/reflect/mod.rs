//! The layer diagram as a live model: patches, reflection edits and snapshots.

mod apply;
mod edit;
mod patch;
mod snapshot;

pub use apply::PatchReport;
pub use edit::{Edit, ExitCount, ReflectionView, SlotView};
pub use patch::{MegamodelSource, Patch, PatchStep};
pub use snapshot::{InstanceSnapshot, Snapshot, SNAPSHOT_FORMAT};
