//! Filesystem helpers: scenario discovery and atomic-enough writes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use cfplan_core::annotator::{AnnotationRecord, DatasetManifest};
use cfplan_core::scenario::{load_scenario, LoadOptions, Scenario, ScenarioFormat};

use crate::Invalid;

/// Format implied by a file extension, if it is a scenario file at all.
pub fn scenario_format(path: &Path) -> Option<ScenarioFormat> {
    match path.extension()?.to_str()? {
        "json" => Some(ScenarioFormat::Canonical),
        "log" | "txt" => Some(ScenarioFormat::DeepaccidentLog),
        _ => None,
    }
}

/// Scenario files directly inside `dir`, sorted by name.
pub fn list_scenarios(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| anyhow!(Invalid(format!("scenario_dir {}: {e}", dir.display()))))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && scenario_format(p).is_some())
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn load_scenario_file(path: &Path, strict: bool) -> Result<Scenario> {
    let format = scenario_format(path)
        .ok_or_else(|| anyhow!(Invalid(format!("{}: unknown scenario extension", path.display()))))?;
    let bytes = fs::read(path).map_err(|e| anyhow!(Invalid(format!("{}: {e}", path.display()))))?;
    let loaded = load_scenario(&bytes, format, LoadOptions { strict })
        .map_err(|e| anyhow!(Invalid(format!("{}: {e}", path.display()))))?;
    Ok(loaded.scenario)
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let bytes = fs::read(path).map_err(|e| anyhow!(Invalid(format!("manifest {}: {e}", path.display()))))?;
    DatasetManifest::from_json(&bytes).map_err(|e| anyhow!(Invalid(format!("manifest {}: {e}", path.display()))))
}

pub fn read_record(path: &Path) -> Result<AnnotationRecord> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    AnnotationRecord::from_json(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Directory against which manifest-relative paths resolve.
pub fn manifest_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}
