use anyhow::Result;
use cfplan_core::scenario::write_scenario;
use cfplan_core::synthetic::suite;

use crate::{files, Outcome, RunConfig};

/// Write a seeded synthetic suite into `scenario_dir`.
pub fn synth(cfg: &RunConfig, total: usize, collisions: usize) -> Result<(usize, Outcome)> {
    let scenes = suite(total, collisions.min(total), cfg.seed);
    for s in &scenes {
        files::write(&cfg.scenario_dir.join(format!("{}.json", s.scene_id)), write_scenario(s))?;
    }
    Ok((scenes.len(), Outcome::Success))
}
