use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{AnnotationRecord, GtSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub scene_id: String,
    pub analysis_time: f64,
    /// Record file, relative to the manifest's directory.
    pub record_path: String,
    /// Scenario file the record was built from.
    pub scenario_path: String,
    pub is_collision_scene: bool,
    pub gt_source: GtSource,
}

impl ManifestEntry {
    pub fn new(record: &AnnotationRecord, scenario_path: &str) -> Self {
        Self {
            sample_id: record.sample_id.clone(),
            scene_id: record.scene_id.clone(),
            analysis_time: record.analysis_time,
            record_path: record.file_name(),
            scenario_path: scenario_path.to_string(),
            is_collision_scene: record.provenance.is_collision_scene,
            gt_source: record.provenance.gt_source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSide {
    Train,
    Val,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    /// Records drawn from scenes with a collision record.
    pub collision: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub records: Vec<ManifestEntry>,
    #[serde(default)]
    pub split: BTreeMap<String, SplitSide>,
    pub counts: Counts,
}

impl DatasetManifest {
    /// Assemble a manifest ordered by `(scene_id, analysis_time)`.
    pub fn new(mut records: Vec<ManifestEntry>) -> Self {
        records.sort_by(|a, b| {
            a.scene_id
                .cmp(&b.scene_id)
                .then(a.analysis_time.total_cmp(&b.analysis_time))
        });
        let counts = Counts {
            total: records.len(),
            collision: records.iter().filter(|r| r.is_collision_scene).count(),
        };
        Self {
            records,
            split: BTreeMap::new(),
            counts,
        }
    }

    pub fn scenes(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.scene_id.as_str()).collect()
    }

    pub fn side_of(&self, scene_id: &str) -> Option<SplitSide> {
        self.split.get(scene_id).copied()
    }

    pub fn entries_in(&self, side: SplitSide) -> impl Iterator<Item = &ManifestEntry> {
        self.records
            .iter()
            .filter(move |r| self.side_of(&r.scene_id) == Some(side))
    }

    pub fn validate(&self) -> Result<()> {
        let expected = Counts {
            total: self.records.len(),
            collision: self.records.iter().filter(|r| r.is_collision_scene).count(),
        };
        if expected != self.counts {
            return Err(Error::Structure(format!(
                "counts {:?} disagree with records {:?}",
                self.counts, expected
            )));
        }
        let mut ids = BTreeSet::new();
        for r in &self.records {
            if !ids.insert(r.sample_id.as_str()) {
                return Err(Error::Structure(format!("duplicate sample {}", r.sample_id)));
            }
        }
        if !self.split.is_empty() {
            for scene in self.scenes() {
                if !self.split.contains_key(scene) {
                    return Err(Error::Structure(format!("scene {scene} has no split side")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        crate::json::to_fixed_json(self).expect("manifest serialization is infallible")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: Self = serde_json::from_slice(bytes).map_err(|e| {
            Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        m.validate()?;
        Ok(m)
    }
}

/// Assign whole scenes to train/val.
///
/// Collision and non-collision scenes are shuffled separately with a seeded
/// ChaCha8 stream; each stratum with at least two scenes contributes between
/// one and `n - 1` validation scenes, `round(n * (1 - ratio))` when possible.
pub fn split_scenes(manifest: &DatasetManifest, ratio: f64, seed: u64) -> Result<DatasetManifest> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    let mut strata: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
    let mut seen = BTreeSet::new();
    for r in &manifest.records {
        if seen.insert(r.scene_id.as_str()) {
            strata[r.is_collision_scene as usize].push(r.scene_id.as_str());
        }
    }
    let total = seen.len();
    if total < 2 {
        return Err(Error::Structure(format!(
            "{total} scene(s): a scene-level split needs at least 2"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = BTreeMap::new();
    for stratum in &mut strata {
        stratum.sort_unstable();
        stratum.shuffle(&mut rng);
        let n = stratum.len();
        let mut n_val = (n as f64 * (1.0 - ratio)).round() as usize;
        if n >= 2 {
            n_val = n_val.clamp(1, n - 1);
        } else {
            n_val = 0;
        }
        for (i, scene) in stratum.iter().enumerate() {
            let side = if i < n_val { SplitSide::Val } else { SplitSide::Train };
            split.insert(scene.to_string(), side);
        }
    }
    if !split.values().any(|s| *s == SplitSide::Val) {
        // Two singleton strata: send the collision scene to validation.
        let scene = strata[1].first().or(strata[0].first()).expect("two scenes exist");
        split.insert(scene.to_string(), SplitSide::Val);
    }

    let mut out = manifest.clone();
    out.split = split;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(scene: &str, t: f64, collision: bool) -> ManifestEntry {
        ManifestEntry {
            sample_id: super::super::record::sample_id(scene, t),
            scene_id: scene.into(),
            analysis_time: t,
            record_path: format!("{scene}.json"),
            scenario_path: format!("{scene}.scenario.json"),
            is_collision_scene: collision,
            gt_source: GtSource::PostIntervention,
        }
    }

    fn ten_scenes(collisions: usize) -> DatasetManifest {
        let mut entries = Vec::new();
        for i in 0..10 {
            for k in 0..3 {
                entries.push(entry(&format!("scene_{i:03}"), 1.5 + k as f64 * 0.5, i < collisions));
            }
        }
        DatasetManifest::new(entries)
    }

    #[test]
    fn stratified_split() {
        let m = split_scenes(&ten_scenes(4), 0.8, 7).unwrap();
        let val: Vec<_> = m.split.iter().filter(|(_, s)| **s == SplitSide::Val).collect();
        assert_eq!(val.len(), 2);
        assert_eq!(m.split.len(), 10);
        assert!(m.entries_in(SplitSide::Val).any(|r| r.is_collision_scene));
        m.validate().unwrap();
    }

    #[test]
    fn split_is_deterministic() {
        let m = ten_scenes(4);
        assert_eq!(split_scenes(&m, 0.8, 7).unwrap(), split_scenes(&m, 0.8, 7).unwrap());
    }

    #[test]
    fn single_stratum() {
        let m = split_scenes(&ten_scenes(0), 0.8, 3).unwrap();
        assert_eq!(m.split.values().filter(|s| **s == SplitSide::Val).count(), 2);
        assert_eq!(m.split.values().filter(|s| **s == SplitSide::Train).count(), 8);
    }

    #[test]
    fn single_scene_is_rejected() {
        let m = DatasetManifest::new(vec![entry("only", 1.5, false), entry("only", 2.0, false)]);
        assert!(split_scenes(&m, 0.8, 1).is_err());
    }

    #[test]
    fn two_singleton_strata() {
        let m = DatasetManifest::new(vec![entry("a", 1.5, false), entry("b", 1.5, true)]);
        let s = split_scenes(&m, 0.8, 1).unwrap();
        assert_eq!(s.split["b"], SplitSide::Val);
        assert_eq!(s.split["a"], SplitSide::Train);
    }

    #[test]
    fn counts_and_order() {
        let m = DatasetManifest::new(vec![
            entry("b", 2.0, true),
            entry("a", 2.0, false),
            entry("b", 1.5, true),
        ]);
        assert_eq!(m.counts, Counts { total: 3, collision: 2 });
        assert_eq!(m.records[0].scene_id, "a");
        assert_eq!(m.records[1].analysis_time, 1.5);
        let back = DatasetManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
