use std::fmt::Write;

use crate::config::PlannerConfig;
use crate::kinematics::enumerate_meta_actions;
use crate::scenario::{AgentTrack, ObservationWindow};

const SYSTEM: &str = "\
You are a driving risk analyst. Given the recent motion of an ego vehicle and
the agents around it, reason in five stages: describe the scene, identify the
critical object, estimate the current risk, judge every counterfactual
meta-action, and plan the ego's next trajectory. Answer with one JSON object.";

fn track_block(out: &mut String, title: &str, track: &AgentTrack) {
    let _ = writeln!(
        out,
        "{title}: {} ({}, {:.2} m x {:.2} m)",
        track.agent_id,
        track.category.as_str(),
        track.footprint.length,
        track.footprint.width
    );
    let _ = writeln!(out, "  t x y vx vy heading");
    for s in &track.samples {
        let _ = writeln!(
            out,
            "  {:.3} {:.3} {:.3} {:.3} {:.3} {:.4}",
            s.t, s.position.x, s.position.y, s.velocity.x, s.velocity.y, s.heading
        );
    }
}

/// Render the system, user and task sections for one observation window.
///
/// Output depends only on the window and config, so identical inputs give
/// identical bytes.
pub fn assemble_prompt(window: &ObservationWindow, cfg: &PlannerConfig) -> String {
    let mut out = String::new();
    out.push_str("### SYSTEM\n");
    out.push_str(SYSTEM);
    out.push_str("\n\n### USER\n");
    let _ = writeln!(out, "scene: {}", window.scene_id);
    let _ = writeln!(out, "analysis time: {:.3} s", window.t);
    let _ = writeln!(
        out,
        "history: {:.2} s at {:.2} s steps, world frame (x east, y north, meters)",
        cfg.history_window, cfg.rollout_dt
    );
    track_block(&mut out, "ego", &window.ego_history);
    let _ = writeln!(out, "neighbors: {}", window.neighbor_histories.len());
    for n in &window.neighbor_histories {
        track_block(&mut out, "neighbor", n);
    }
    let _ = writeln!(out, "camera frames: {}", window.camera_refs.len());
    for f in &window.camera_refs {
        let _ = writeln!(out, "  {:.3} {} {}", f.t, f.camera.as_str(), f.image_path);
    }

    out.push_str("\n### TASK\n");
    out.push_str("stage1_scene: weather, lighting, road_layout.\n");
    out.push_str(
        "stage2_critical: the object most likely to conflict with the ego, or null: \
         agent_id, category, relative_position [x, y] in the ego frame (x forward, y left), \
         distance in meters, predicted_behavior (one of approaching, crossing from left, \
         crossing from right, leading, stationary).\n",
    );
    let _ = writeln!(
        out,
        "stage3_risk: Safe or Unsafe (Unsafe when time-to-collision is below {:.1} s).",
        cfg.ttc_threshold
    );
    let _ = writeln!(
        out,
        "stage4_counterfactuals: Safe or Unsafe for each meta-action (short-term behavior \
         over [0, {:.1}) s, long-term over [{:.1}, {:.1}] s, +/-{:.1} m/s^2):",
        cfg.short_horizon, cfg.short_horizon, cfg.plan_horizon, cfg.accel_step
    );
    for a in enumerate_meta_actions() {
        let _ = writeln!(out, "  {a}");
    }
    let _ = writeln!(
        out,
        "stage5_plan: short, long, waypoints [[offset, x, y], ...] in the world frame every \
         {:.1} s from 0 to {:.1} s.",
        cfg.rollout_dt, cfg.plan_horizon
    );
    out.push_str(
        "Output schema:\n\
         {\"stage1_scene\": {\"weather\": str, \"lighting\": str, \"road_layout\": str},\n \
         \"stage2_critical\": {\"agent_id\": str, \"category\": str, \"relative_position\": [x, y], \
         \"distance\": num, \"predicted_behavior\": str} | null,\n \
         \"stage3_risk\": \"Safe\" | \"Unsafe\",\n \
         \"stage4_counterfactuals\": {\"<meta-action>\": \"Safe\" | \"Unsafe\", ...},\n \
         \"stage5_plan\": {\"short\": str, \"long\": str, \"waypoints\": [[offset, x, y], ...]}}\n",
    );
    out
}
