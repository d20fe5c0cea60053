use anyhow::{anyhow, Result};
use cfplan_core::annotator::{annotate_scenario, split_scenes, DatasetManifest, ManifestEntry, SplitSide};
use log::{info, warn};

use crate::files::{self, list_scenarios, load_scenario_file};
use crate::{parallel_map, Invalid, Outcome, RunConfig};

pub struct AnnotateSummary {
    pub scenes: usize,
    pub skipped: usize,
    pub manifest: DatasetManifest,
}

impl AnnotateSummary {
    pub fn line(&self) -> String {
        format!(
            "annotated {} records ({} from collision scenes) from {} of {} scenario files",
            self.manifest.counts.total,
            self.manifest.counts.collision,
            self.scenes,
            self.scenes + self.skipped
        )
    }
}

/// One line with scene, record and collision counts per side.
pub fn split_line(m: &DatasetManifest) -> String {
    let count = |side| {
        let scenes = m.split.values().filter(|s| **s == side).count();
        let records = m.entries_in(side).count();
        let collision = m.entries_in(side).filter(|e| e.is_collision_scene).count();
        format!("{scenes} scenes, {records} records ({collision} collision)")
    };
    format!("train: {}; val: {}", count(SplitSide::Train), count(SplitSide::Val))
}

/// Annotate every scenario in `scenario_dir`; records go to
/// `<manifest dir>/records/` and the manifest to `manifest_path`.
pub fn annotate(cfg: &RunConfig) -> Result<(AnnotateSummary, Outcome)> {
    let paths = list_scenarios(&cfg.scenario_dir)?;
    if paths.is_empty() {
        return Err(anyhow!(Invalid(format!(
            "no scenario files in {}",
            cfg.scenario_dir.display()
        ))));
    }
    let manifest_path = cfg.manifest_path();
    let out_dir = files::manifest_dir(&manifest_path);
    let mut entries = Vec::new();
    let mut written = Vec::new();
    let mut skipped = 0;
    let loaded = parallel_map(&paths, |path| {
        load_scenario_file(path, cfg.strict_parsing).map(|s| {
            let records = annotate_scenario(&s, &cfg.planner);
            (s.scene_id, records)
        })
    });
    for (path, result) in paths.iter().zip(loaded) {
        let (scene_id, records) = match result {
            Ok(r) => r,
            Err(e) => {
                warn!("skipping {}: {e:#}", path.display());
                skipped += 1;
                continue;
            }
        };
        if records.is_empty() {
            warn!("{scene_id}: no analysis windows");
        }
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .expect("listed paths have UTF-8 names");
        for r in records {
            let mut entry = ManifestEntry::new(&r, name);
            entry.record_path = format!("records/{}", r.file_name());
            written.push((out_dir.join(&entry.record_path), r.to_json()));
            entries.push(entry);
        }
    }
    for (path, bytes) in &written {
        files::write(path, bytes)?;
    }
    let manifest = DatasetManifest::new(entries);
    files::write(&manifest_path, manifest.to_json())?;
    info!("manifest written to {}", manifest_path.display());
    // Skipped scenes are only warned about; a run fails when nothing was produced.
    let outcome = if manifest.counts.total == 0 {
        Outcome::Partial
    } else {
        Outcome::Success
    };
    Ok((
        AnnotateSummary {
            scenes: paths.len() - skipped,
            skipped,
            manifest,
        },
        outcome,
    ))
}

/// Assign scenes of the manifest at `manifest_path` to train/val in place.
pub fn split(cfg: &RunConfig) -> Result<(DatasetManifest, Outcome)> {
    let path = cfg.manifest_path();
    let manifest = files::read_manifest(&path)?;
    let out = split_scenes(&manifest, cfg.split_ratio, cfg.seed).map_err(|e| anyhow!(Invalid(e.to_string())))?;
    files::write(&path, out.to_json())?;
    Ok((out, Outcome::Success))
}
