//! Run configuration: a JSON file, dotted `--set` overrides, then flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use cfplan_core::eval::{Endpoint, L2Mode};
use cfplan_core::PlannerConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Invalid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSource {
    /// Rule-based responder built from the ground-truth pipeline.
    #[default]
    Oracle,
    /// Remote model at `endpoint_url`.
    Endpoint,
    /// Text files named `<sample_id>.txt` or `<sample_id>.json` in `responses_dir`.
    Directory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub planner: PlannerConfig,
    pub scenario_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/manifest.json`.
    pub manifest_path: Option<PathBuf>,
    pub endpoint_url: Option<String>,
    pub seed: u64,
    pub strict_parsing: bool,
    /// Fraction of scenes assigned to train.
    pub split_ratio: f64,
    pub l2_mode: L2Mode,
    pub response_source: ResponseSource,
    pub responses_dir: Option<PathBuf>,
    pub timeout_s: f64,
    pub retries: u32,
    pub max_in_flight: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            scenario_dir: PathBuf::from("scenarios"),
            output_dir: PathBuf::from("out"),
            manifest_path: None,
            endpoint_url: None,
            seed: 0,
            strict_parsing: false,
            split_ratio: 0.8,
            l2_mode: L2Mode::Average,
            response_source: ResponseSource::Oracle,
            responses_dir: None,
            timeout_s: 120.0,
            retries: 1,
            max_in_flight: 4,
        }
    }
}

/// Set `path` (dot separated) inside `root` to `raw`, parsed as JSON when
/// possible and as a plain string otherwise.
fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut keys = path.split('.').peekable();
    let mut cur = root;
    while let Some(key) = keys.next() {
        if key.is_empty() {
            return Err(anyhow!(Invalid(format!("bad override key {path:?}"))));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| anyhow!(Invalid(format!("{path}: {key} is not inside an object"))))?;
        if keys.peek().is_none() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

impl RunConfig {
    /// Resolve the configuration from an optional file plus overrides.
    pub fn resolve(
        file: Option<&Path>,
        overrides: &[String],
        seed: Option<u64>,
        strict: bool,
    ) -> Result<Self> {
        let mut root = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| anyhow!(Invalid(format!("cannot read config {}: {e}", p.display()))))?;
                serde_json::from_str(&text)
                    .map_err(|e| anyhow!(Invalid(format!("config {}: {e}", p.display()))))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| anyhow!(Invalid(format!("override {o:?} is not key=value"))))?;
            apply_override(&mut root, k.trim(), v.trim())?;
        }
        let mut cfg: RunConfig =
            serde_json::from_value(root).map_err(|e| anyhow!(Invalid(format!("config: {e}"))))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.strict_parsing |= strict;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.planner
            .validate()
            .map_err(|e| anyhow!(Invalid(e.to_string())))?;
        let bad = |m: String| Err(anyhow!(Invalid(m)));
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} must lie in (0, 1)", self.split_ratio));
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return bad(format!("timeout_s {} must be positive", self.timeout_s));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("manifest.json"))
    }

    pub fn endpoint(&self) -> Result<Endpoint> {
        let url = self
            .endpoint_url
            .clone()
            .ok_or_else(|| anyhow!(Invalid("response_source is endpoint but endpoint_url is unset".into())))?;
        Ok(Endpoint {
            url,
            timeout: std::time::Duration::from_secs_f64(self.timeout_s),
            retries: self.retries,
        })
    }

    pub fn responses_dir(&self) -> Result<&Path> {
        self.responses_dir
            .as_deref()
            .ok_or_else(|| anyhow!(Invalid("responses_dir is unset".into())))
    }

    /// SHA-256 over the compact JSON of the resolved config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).context("serializing config")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_parse() {
        let cfg = RunConfig::resolve(
            None,
            &[
                "planner.stride=1.0".into(),
                "output_dir=results".into(),
                "l2_mode=\"point_at_horizon\"".into(),
                "max_in_flight=2".into(),
            ],
            Some(9),
            true,
        )
        .unwrap();
        assert_eq!(cfg.planner.stride, 1.0);
        assert_eq!(cfg.output_dir, PathBuf::from("results"));
        assert_eq!(cfg.l2_mode, L2Mode::PointAtHorizon);
        assert_eq!(cfg.seed, 9);
        assert!(cfg.strict_parsing);
        assert_eq!(cfg.manifest_path(), PathBuf::from("results/manifest.json"));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_invalid() {
        for o in ["planner.strid=1", "nonsense=1", "planner.rollout_dt=0.3", "split_ratio=1.5", "seed=-1"] {
            let err = RunConfig::resolve(None, &[o.into()], None, false).unwrap_err();
            assert!(err.downcast_ref::<Invalid>().is_some(), "{o}: {err}");
        }
        assert!(RunConfig::resolve(None, &["noequals".into()], None, false).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
