//! Ground-truth annotation: window sampling, five-stage records and
//! scene-level dataset splits.

mod build;
mod manifest;
mod record;

pub use build::{annotate_scenario, build_record, build_record_with_plan, infer_meta_action, sample_windows};
pub use manifest::{split_scenes, Counts, DatasetManifest, ManifestEntry, SplitSide};
pub use record::{
    sample_id, AnnotationRecord, CriticalStage, GtSource, PlanStage, PredictedBehavior, Provenance,
    Waypoint,
};
