use std::path::PathBuf;

use anyhow::{anyhow, Result};
use cfplan_core::config::{PlannerConfig, MAX_INTERPOLATION_GAP, TIME_EPS};
use cfplan_core::kinematics::MetaAction;
use cfplan_core::planner::plan;
use cfplan_core::risk::{boxes_overlap, OrientedBox};
use cfplan_core::scenario::{extract_assessment_window, Scenario, TrackSample};
use log::warn;
use serde::Serialize;

use crate::files::{self, list_scenarios, load_scenario_file};
use crate::{Invalid, Outcome, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Decision {
    pub t: f64,
    pub action: MetaAction,
}

#[derive(Debug, Clone, Serialize)]
pub struct Replay {
    pub scene_id: String,
    pub logged_collision: bool,
    pub collided: bool,
    pub first_contact: Option<f64>,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub config_hash: String,
    pub scenes: usize,
    pub collisions: usize,
    pub collision_rate: Option<f64>,
    pub replays: Vec<Replay>,
}

impl SimulationReport {
    /// One line per replayed scene, then the overall rate.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.replays {
            out.push_str(&format!(
                "{}: {} decisions, logged collision: {}, replay collision: {}\n",
                r.scene_id,
                r.decisions.len(),
                r.logged_collision,
                r.first_contact.map_or("none".to_string(), |t| format!("at {t:.3} s"))
            ));
        }
        out.push_str(&format!(
            "closed-loop collision rate: {} ({} of {} scenes)\n",
            self.collision_rate.map_or("N/A".to_string(), |r| format!("{r:.2}%")),
            self.collisions,
            self.scenes
        ));
        out
    }
}

fn round_micros(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Replay `s` with the ego driven by the planner: every `stride` seconds
/// the tree is evaluated from the simulated ego state and the chosen
/// branch is executed until the next decision. Neighbors follow their logs.
pub fn replay(s: &Scenario, cfg: &PlannerConfig) -> Result<Replay> {
    if cfg.stride > cfg.plan_horizon + TIME_EPS {
        return Err(anyhow!(Invalid(format!(
            "stride {} exceeds the planning horizon {}",
            cfg.stride, cfg.plan_horizon
        ))));
    }
    let (start, end) = s.ego_span();
    let mut t = round_micros(start + cfg.history_window);
    let mut world = s.clone();
    let ego_idx = world
        .tracks
        .iter()
        .position(|tr| tr.agent_id == s.ego_id)
        .expect("validated scenario has its ego");
    world.tracks[ego_idx].samples.retain(|smp| smp.t <= t + TIME_EPS);

    let mut out = Replay {
        scene_id: s.scene_id.clone(),
        logged_collision: s.is_collision_scene(),
        collided: false,
        first_contact: None,
        decisions: Vec::new(),
    };
    while t + cfg.stride <= end + TIME_EPS {
        let window = extract_assessment_window(&world, t, cfg)?;
        let result = plan(&window, cfg)?;
        out.decisions.push(Decision {
            t,
            action: result.selected,
        });
        let ego = world.tracks[ego_idx].clone();
        for smp in &result.planned_trajectory.samples {
            if smp.offset <= TIME_EPS || smp.offset > cfg.stride + TIME_EPS {
                continue;
            }
            let at = round_micros(t + smp.offset);
            world.tracks[ego_idx].samples.push(TrackSample {
                t: at,
                position: smp.position,
                velocity: smp.velocity(),
                heading: smp.heading,
            });
            if out.first_contact.is_none() {
                let ego_box = OrientedBox::new(smp.position, smp.heading, ego.footprint);
                let hit = s.neighbors().any(|n| {
                    n.sample_at(at, MAX_INTERPOLATION_GAP).is_some_and(|ns| {
                        boxes_overlap(&ego_box, &OrientedBox::new(ns.position, ns.heading, n.footprint))
                    })
                });
                if hit {
                    out.first_contact = Some(at);
                    out.collided = true;
                }
            }
        }
        t = round_micros(t + cfg.stride);
    }
    Ok(out)
}

pub fn simulate(cfg: &RunConfig, scene: Option<PathBuf>) -> Result<(SimulationReport, Outcome)> {
    let paths = match scene {
        Some(p) => vec![p],
        None => list_scenarios(&cfg.scenario_dir)?,
    };
    let mut replays = Vec::new();
    let mut outcome = Outcome::Success;
    for path in &paths {
        let result = load_scenario_file(path, cfg.strict_parsing).and_then(|s| replay(&s, &cfg.planner));
        match result {
            Ok(r) => replays.push(r),
            Err(e) if paths.len() == 1 => return Err(e),
            Err(e) => {
                warn!("skipping {}: {e:#}", path.display());
                outcome = Outcome::Partial;
            }
        }
    }
    let collisions = replays.iter().filter(|r| r.collided).count();
    let report = SimulationReport {
        config_hash: cfg.hash(),
        scenes: replays.len(),
        collisions,
        collision_rate: (!replays.is_empty()).then(|| 100.0 * collisions as f64 / replays.len() as f64),
        replays,
    };
    files::write(&cfg.output_dir.join("simulate.json"), cfplan_core::json::to_fixed_json(&report)?)?;
    Ok((report, outcome))
}
