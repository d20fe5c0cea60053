use std::collections::BTreeMap;

use log::warn;

use super::record::{
    sample_id, AnnotationRecord, CriticalStage, GtSource, PlanStage, Provenance, Waypoint,
};
use crate::config::{PlannerConfig, MAX_INTERPOLATION_GAP, TIME_EPS};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::kinematics::{Behavior, MetaAction};
use crate::planner::{plan, PlanResult};
use crate::risk::{
    identify_critical_object, instantaneous_ttc, label_current_risk, trajectories_collide,
    OrientedTrajectory, RiskClass,
};
use crate::scenario::{current_state, extract_assessment_window, Scenario};

fn round_micros(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Analysis times for one scene.
///
/// Collision scenes step backward from one grid step before impact; other
/// scenes step forward from the first full window, keeping stable windows
/// only. Times are returned in ascending order.
pub fn sample_windows(s: &Scenario, cfg: &PlannerConfig) -> Vec<f64> {
    let (start, end) = s.ego_span();
    if end - start < cfg.history_window - TIME_EPS {
        warn!(
            "{}: duration {:.3} s is shorter than the {:.3} s history window",
            s.scene_id,
            end - start,
            cfg.history_window
        );
        return Vec::new();
    }
    let earliest = start + cfg.history_window - TIME_EPS;

    if let Some(c) = &s.collision {
        let anchor = (c.impact_time - cfg.rollout_dt).min(end);
        let mut times: Vec<f64> = (0..)
            .map(|k| round_micros(anchor - k as f64 * cfg.stride))
            .take_while(|&t| t >= earliest)
            .collect();
        times.reverse();
        return times;
    }

    (0..)
        .map(|k| round_micros(start + cfg.history_window + k as f64 * cfg.stride))
        .take_while(|&t| t <= end + TIME_EPS)
        .filter(|&t| is_stable(s, t, cfg))
        .collect()
}

fn is_stable(s: &Scenario, t: f64, cfg: &PlannerConfig) -> bool {
    let window = match extract_assessment_window(s, t, cfg) {
        Ok(w) => w,
        Err(e) => {
            warn!("{}: skipping t = {t:.3}: {e}", s.scene_id);
            return false;
        }
    };
    label_current_risk(&window, s, cfg).label == RiskClass::Safe
        || min_ttc_at(s, t - cfg.history_window, cfg) >= cfg.ttc_threshold
}

/// Minimum instantaneous TTC between the ego and every neighbor within the
/// assessment radius at time `t`.
fn min_ttc_at(s: &Scenario, t: f64, cfg: &PlannerConfig) -> f64 {
    let Some((ego, _)) = current_state(s.ego(), t) else {
        return f64::INFINITY;
    };
    s.neighbors()
        .filter_map(|n| current_state(n, t))
        .filter(|(n, _)| n.position.distance(ego.position) <= cfg.assessment_radius)
        .map(|(n, _)| instantaneous_ttc(&ego, &n).ttc)
        .fold(f64::INFINITY, f64::min)
}

/// The logged ego motion over `[t, t + plan_horizon]`, when it is complete
/// and never touches any logged neighbor.
fn contact_free_recorded_future(s: &Scenario, t: f64, cfg: &PlannerConfig) -> Result<Option<OrientedTrajectory>> {
    let ego = OrientedTrajectory::from_recorded(s.ego(), t, cfg);
    if ego.poses.len() != cfg.horizon_steps() + 1 || ego.poses[0].offset.abs() > TIME_EPS {
        return Ok(None);
    }
    for n in s.neighbors() {
        let other = OrientedTrajectory::from_recorded(n, t, cfg);
        if trajectories_collide(&ego, &other)?.is_some() {
            return Ok(None);
        }
    }
    Ok(Some(ego))
}

/// Least-squares slope of `v` against `x`.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn nearest_behavior(accel: f64, step: f64) -> Behavior {
    let mut best = Behavior::Accelerate;
    for b in Behavior::ALL {
        if (accel - b.sign() * step).abs() < (accel - best.sign() * step).abs() {
            best = b;
        }
    }
    best
}

/// Snap a logged speed profile onto the meta-action grid: each segment's
/// least-squares acceleration goes to the nearest of `+a`, `0`, `-a`.
///
/// `speeds[k]` is the speed at offset `k * rollout_dt`.
pub fn infer_meta_action(speeds: &[f64], cfg: &PlannerConfig) -> MetaAction {
    let split = cfg.short_steps().min(speeds.len().saturating_sub(1));
    let points: Vec<(f64, f64)> = speeds
        .iter()
        .enumerate()
        .map(|(k, &v)| (cfg.offset(k), v))
        .collect();
    let short = slope(&points[..=split]);
    let long = if split + 1 < points.len() {
        slope(&points[split..])
    } else {
        0.0
    };
    MetaAction::new(
        nearest_behavior(short, cfg.accel_step),
        nearest_behavior(long, cfg.accel_step),
    )
}

fn recorded_speeds(s: &Scenario, t: f64, heading: f64, cfg: &PlannerConfig) -> Vec<f64> {
    let dir = Vec2::from_heading(heading);
    (0..=cfg.horizon_steps())
        .filter_map(|k| s.ego().sample_at(t + cfg.offset(k), MAX_INTERPOLATION_GAP))
        .map(|smp| smp.velocity.dot(dir).max(0.0))
        .collect()
}

/// Five-stage ground truth at analysis time `t`, together with the plan the
/// counterfactual stages were derived from.
pub fn build_record_with_plan(
    s: &Scenario,
    t: f64,
    cfg: &PlannerConfig,
) -> Result<(AnnotationRecord, PlanResult)> {
    let window = extract_assessment_window(s, t, cfg)?;
    let critical = identify_critical_object(&window, s, cfg);
    let risk = label_current_risk(&window, s, cfg);
    let result = plan(&window, cfg)?;

    let stage4: BTreeMap<MetaAction, RiskClass> =
        result.outcomes.iter().map(|o| (o.action, o.label)).collect();

    let recorded = if risk.label == RiskClass::Safe {
        contact_free_recorded_future(s, t, cfg)?
    } else {
        None
    };
    let (stage5, gt_source) = match recorded {
        Some(traj) => {
            let heading = window.ego_state().heading;
            let action = infer_meta_action(&recorded_speeds(s, t, heading, cfg), cfg);
            let waypoints = traj
                .poses
                .iter()
                .map(|p| Waypoint {
                    offset: p.offset,
                    position: p.position,
                })
                .collect();
            (
                PlanStage {
                    short: action.short,
                    long: action.long,
                    waypoints,
                },
                GtSource::RecordedFuture,
            )
        }
        None => (
            PlanStage {
                short: result.selected.short,
                long: result.selected.long,
                waypoints: result
                    .planned_trajectory
                    .samples
                    .iter()
                    .map(|smp| Waypoint {
                        offset: smp.offset,
                        position: smp.position,
                    })
                    .collect(),
            },
            GtSource::PostIntervention,
        ),
    };

    let record = AnnotationRecord {
        sample_id: sample_id(&s.scene_id, t),
        scene_id: s.scene_id.clone(),
        analysis_time: t,
        stage1_scene: s.environment.clone(),
        stage2_critical: critical.as_ref().map(CriticalStage::from),
        stage3_risk: risk.label,
        stage4_counterfactuals: stage4,
        stage5_plan: stage5,
        provenance: Provenance {
            is_collision_scene: s.is_collision_scene(),
            gt_source,
        },
    };
    Ok((record, result))
}

pub fn build_record(s: &Scenario, t: f64, cfg: &PlannerConfig) -> Result<AnnotationRecord> {
    build_record_with_plan(s, t, cfg).map(|(r, _)| r)
}

/// Every record of one scene, in ascending analysis time. Samples that fail
/// to build are logged and skipped.
pub fn annotate_scenario(s: &Scenario, cfg: &PlannerConfig) -> Vec<AnnotationRecord> {
    sample_windows(s, cfg)
        .into_iter()
        .filter_map(|t| match build_record(s, t, cfg) {
            Ok(r) => Some(r),
            Err(e) => {
                warn!("{}: no record at t = {t:.3}: {e}", s.scene_id);
                None
            }
        })
        .collect()
}
