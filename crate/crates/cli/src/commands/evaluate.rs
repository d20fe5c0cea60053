use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use cfplan_core::annotator::{AnnotationRecord, DatasetManifest, ManifestEntry, SplitSide};
use cfplan_core::eval::{
    assemble_prompt, oracle_text, query_batch, score_sample, MetricsReport, ReportHeader, SampleScore,
};
use cfplan_core::scenario::{extract_window, Scenario};
use log::warn;

use crate::files::{self, load_scenario_file};
use crate::{parallel_map, Invalid, Outcome, ResponseSource, RunConfig};

/// A validation sample with its ground truth and source scene.
struct Sample<'a> {
    entry: &'a ManifestEntry,
    record: AnnotationRecord,
}

struct Dataset {
    manifest: DatasetManifest,
    scenes: BTreeMap<String, Scenario>,
}

impl Dataset {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let manifest = files::read_manifest(&cfg.manifest_path())?;
        if manifest.split.is_empty() {
            return Err(anyhow!(Invalid("manifest has no split; run `split` first".into())));
        }
        let mut scenes = BTreeMap::new();
        for e in manifest.entries_in(SplitSide::Val) {
            if !scenes.contains_key(&e.scene_id) {
                let s = load_scenario_file(&cfg.scenario_dir.join(&e.scenario_path), cfg.strict_parsing)?;
                scenes.insert(e.scene_id.clone(), s);
            }
        }
        Ok(Self { manifest, scenes })
    }

    fn samples(&self, cfg: &RunConfig) -> Result<Vec<Sample<'_>>> {
        let dir = files::manifest_dir(&cfg.manifest_path());
        self.manifest
            .entries_in(SplitSide::Val)
            .map(|entry| {
                Ok(Sample {
                    entry,
                    record: files::read_record(&dir.join(&entry.record_path))?,
                })
            })
            .collect()
    }

    fn scene(&self, id: &str) -> &Scenario {
        &self.scenes[id]
    }
}

fn prompt_for(ds: &Dataset, s: &Sample<'_>, cfg: &RunConfig) -> Result<String> {
    let scene = ds.scene(&s.entry.scene_id);
    let window = extract_window(scene, s.record.analysis_time, &cfg.planner)?;
    Ok(assemble_prompt(&window, &cfg.planner))
}

/// Write one prompt file per validation sample to `<output_dir>/prompts/`.
pub fn prompt(cfg: &RunConfig) -> Result<(usize, Outcome)> {
    let ds = Dataset::load(cfg)?;
    let samples = ds.samples(cfg)?;
    for s in &samples {
        let text = prompt_for(&ds, s, cfg)?;
        files::write(&cfg.output_dir.join("prompts").join(format!("{}.txt", s.record.sample_id)), text)?;
    }
    Ok((samples.len(), Outcome::Success))
}

/// Response files in `dir`, keyed by file stem.
fn read_responses(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| anyhow!(Invalid(format!("responses_dir {}: {e}", dir.display()))))?;
    let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
    paths.sort();
    for p in paths {
        let Some(stem) = p.file_stem().and_then(|s| s.to_str()) else { continue };
        let text = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
        if out.insert(stem.to_string(), String::from_utf8_lossy(&text).into_owned()).is_some() {
            warn!("{}: several response files; using {}", stem, p.display());
        }
    }
    Ok(out)
}

fn collect_responses(ds: &Dataset, samples: &[Sample<'_>], cfg: &RunConfig) -> Result<Vec<Result<String, String>>> {
    match cfg.response_source {
        ResponseSource::Oracle => Ok(parallel_map(samples, |s| {
            oracle_text(ds.scene(&s.entry.scene_id), s.record.analysis_time, &cfg.planner).map_err(|e| e.to_string())
        })),
        ResponseSource::Endpoint => {
            let endpoint = cfg.endpoint()?;
            let requests = samples
                .iter()
                .map(|s| Ok((s.record.sample_id.clone(), prompt_for(ds, s, cfg)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(query_batch(&endpoint, &requests, cfg.max_in_flight)
                .into_iter()
                .map(|r| r.map_err(|e| e.to_string()))
                .collect())
        }
        ResponseSource::Directory => {
            let mut found = read_responses(cfg.responses_dir()?)?;
            let out = samples
                .iter()
                .map(|s| {
                    found
                        .remove(&s.record.sample_id)
                        .ok_or_else(|| "no response file".to_string())
                })
                .collect();
            let unmatched: BTreeSet<_> = found.into_keys().collect();
            for id in unmatched {
                warn!("response {id} matches no validation sample; ignored");
            }
            Ok(out)
        }
    }
}

fn source_name(cfg: &RunConfig) -> String {
    match cfg.response_source {
        ResponseSource::Oracle => "oracle".into(),
        ResponseSource::Endpoint => format!("endpoint {}", cfg.endpoint_url.as_deref().unwrap_or("")),
        ResponseSource::Directory => "directory".into(),
    }
}

/// Score validation responses and write `report.json`, `report.txt` and
/// `report.csv` to the output directory.
pub fn evaluate(cfg: &RunConfig) -> Result<(MetricsReport, Outcome)> {
    let ds = Dataset::load(cfg)?;
    let samples = ds.samples(cfg)?;
    if samples.is_empty() {
        return Err(anyhow!(Invalid("validation split is empty".into())));
    }
    let responses = collect_responses(&ds, &samples, cfg)?;
    let pairs: Vec<_> = samples.iter().zip(responses).collect();
    let scores: Vec<SampleScore> = parallel_map(&pairs, |(s, r)| match r {
        Ok(text) => score_sample(text, &s.record, ds.scene(&s.entry.scene_id), &cfg.planner, cfg.l2_mode),
        Err(reason) => {
            warn!("{}: unscored: {reason}", s.record.sample_id);
            SampleScore::unscored(&s.record, reason.clone())
        }
    });
    let header = ReportHeader {
        l2_mode: cfg.l2_mode,
        config_hash: cfg.hash(),
        response_source: source_name(cfg),
    };
    let report = MetricsReport::from_samples(header, scores);
    let table = report.to_table();
    files::write(&cfg.output_dir.join("report.json"), report.to_json())?;
    files::write(&cfg.output_dir.join("report.txt"), &table)?;
    files::write(&cfg.output_dir.join("report.csv"), report.to_csv())?;
    let outcome = if report.n_unscored > 0 {
        Outcome::Partial
    } else {
        Outcome::Success
    };
    Ok((report, outcome))
}

/// `evaluate` over a directory of response texts.
pub fn score(cfg: &RunConfig) -> Result<(MetricsReport, Outcome)> {
    let cfg = RunConfig {
        response_source: ResponseSource::Directory,
        ..cfg.clone()
    };
    evaluate(&cfg)
}
