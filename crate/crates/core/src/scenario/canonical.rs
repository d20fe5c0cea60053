//! Canonical JSON scenario files.

use super::{LoadOptions, LoadedScenario, Scenario};
use crate::error::{Error, Result};

pub(super) fn load(source: &[u8], options: LoadOptions) -> Result<LoadedScenario> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_slice(source);
    let parsed = {
        let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
        let ignoring = serde_ignored::Deserializer::new(&mut de, &mut record);
        serde_path_to_error::deserialize::<_, Scenario>(ignoring)
    };
    let mut scenario = match parsed {
        Ok(s) => s,
        Err(err) => {
            let path = err.path().to_string();
            let inner = err.into_inner();
            return Err(Error::parse(
                format!("line {}, column {}, field `{path}`", inner.line(), inner.column()),
                inner.to_string(),
            ));
        }
    };
    de.end().map_err(|e| {
        Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
    })?;

    let mut warnings = Vec::new();
    if !unknown.is_empty() {
        if options.strict {
            return Err(Error::parse(
                format!("field `{}`", unknown[0]),
                "unknown key rejected in strict mode",
            ));
        }
        warnings.extend(unknown.iter().map(|k| format!("ignored unknown key `{k}`")));
    }

    let before = scenario.tracks.len();
    scenario.tracks.retain(|t| {
        if t.samples.is_empty() {
            warnings.push(format!("dropped agent {:?} with no samples", t.agent_id));
            false
        } else {
            true
        }
    });
    let dropped_agents = before - scenario.tracks.len();

    scenario.normalize();
    scenario.validate()?;
    Ok(LoadedScenario {
        scenario,
        warnings,
        dropped_agents,
    })
}

/// Serialize a scenario to canonical JSON. Output is deterministic and
/// floats are written with shortest round-trip precision.
pub fn write_scenario(scenario: &Scenario) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(scenario).expect("scenario serialization is infallible");
    out.push(b'\n');
    out
}
