use std::path::Path;

use anyhow::{anyhow, Result};
use cfplan_core::annotator::sample_id;
use cfplan_core::kinematics::MetaAction;
use cfplan_core::planner::{plan, PlanResult, SelectionReason};
use cfplan_core::risk::RiskClass;
use cfplan_core::scenario::extract_assessment_window;
use serde::Serialize;

use crate::files::{self, load_scenario_file};
use crate::{Invalid, Outcome, RunConfig};

#[derive(Debug, Serialize)]
pub struct OutcomeRow {
    pub action: MetaAction,
    #[serde(with = "cfplan_core::json::ttc")]
    pub min_ttc: f64,
    pub min_ttc_agent: Option<String>,
    pub min_ttc_offset: Option<f64>,
    pub contact: Option<f64>,
    pub label: RiskClass,
    pub progress: f64,
    pub selected: bool,
}

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub scene_id: String,
    pub t: f64,
    pub selected: MetaAction,
    pub selection_reason: SelectionReason,
    pub outcomes: Vec<OutcomeRow>,
    /// `[offset, x, y]` along the selected branch.
    pub planned_trajectory: Vec<[f64; 3]>,
}

impl PlanReport {
    pub fn new(scene_id: &str, t: f64, r: &PlanResult) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            t,
            selected: r.selected,
            selection_reason: r.selection_reason,
            outcomes: r
                .outcomes
                .iter()
                .map(|o| OutcomeRow {
                    action: o.action,
                    min_ttc: o.min_ttc,
                    min_ttc_agent: o.min_ttc_agent.clone(),
                    min_ttc_offset: o.min_ttc_offset,
                    contact: o.contact,
                    label: o.label,
                    progress: o.progress,
                    selected: o.action == r.selected,
                })
                .collect(),
            planned_trajectory: r
                .planned_trajectory
                .samples
                .iter()
                .map(|s| [s.offset, s.position.x, s.position.y])
                .collect(),
        }
    }

    pub fn table(&self) -> String {
        let mut out = format!("scene {} at t = {:.3} s\n", self.scene_id, self.t);
        out.push_str(&format!(
            "  {:<24} {:>9} {:>7} {:>10}\n",
            "action", "min_ttc", "label", "progress"
        ));
        for o in &self.outcomes {
            let ttc = if o.min_ttc.is_finite() {
                format!("{:.3}", o.min_ttc)
            } else {
                "inf".to_string()
            };
            out.push_str(&format!(
                "{} {:<24} {:>9} {:>7} {:>10.3}\n",
                if o.selected { "*" } else { " " },
                o.action.key(),
                ttc,
                o.label.as_str(),
                o.progress
            ));
        }
        out
    }
}

/// Evaluate the tree for one scene at `t`. The default is the start of the
/// pre-impact window for collision scenes, otherwise the latest time with a
/// full horizon ahead.
pub fn plan_scene(cfg: &RunConfig, scene: &Path, t: Option<f64>) -> Result<(PlanReport, Outcome)> {
    let s = load_scenario_file(scene, cfg.strict_parsing)?;
    let (start, end) = s.ego_span();
    let t = t.unwrap_or_else(|| {
        let target = match &s.collision {
            Some(c) => c.impact_time - cfg.planner.preimpact_window,
            None => end - cfg.planner.plan_horizon,
        };
        (start + cfg.planner.history_window).max(target).min(end)
    });
    let window = extract_assessment_window(&s, t, &cfg.planner).map_err(|e| anyhow!(Invalid(e.to_string())))?;
    let result = plan(&window, &cfg.planner)?;
    let report = PlanReport::new(&s.scene_id, t, &result);
    let path = cfg
        .output_dir
        .join("plans")
        .join(format!("{}.json", sample_id(&s.scene_id, t)));
    files::write(&path, cfplan_core::json::to_fixed_json(&report)?)?;
    Ok((report, Outcome::Success))
}
