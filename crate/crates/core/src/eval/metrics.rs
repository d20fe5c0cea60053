use serde::{Deserialize, Serialize};

use super::response::{ResponseRecord, StageStatus};
use crate::annotator::{AnnotationRecord, Waypoint};
use crate::config::{PlannerConfig, TIME_EPS};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::enumerate_meta_actions;
use crate::risk::{trajectories_collide, OrientedTrajectory, Pose, RiskClass};
use crate::scenario::{Footprint, Scenario};

/// Number of structured fields scored for language accuracy.
pub const LANGUAGE_FIELDS: usize = 19;
/// Tolerance for distance and each relative-position axis (m).
pub const POSITION_TOLERANCE: f64 = 1.0;

fn same_text(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Correct fields out of [`LANGUAGE_FIELDS`].
///
/// Stage 2 scores category, relative position, distance and predicted
/// behavior; when the ground truth has no critical object, all four count
/// as correct only if the response also has none.
pub fn language_correct(resp: &ResponseRecord, gt: &AnnotationRecord) -> usize {
    let ok = |i: usize| resp.status[i] == StageStatus::Ok;
    let mut correct = 0;
    if let (true, Some(s1)) = (ok(0), &resp.stage1) {
        let g = &gt.stage1_scene;
        correct += [
            same_text(&s1.weather, &g.weather),
            same_text(&s1.lighting, &g.lighting),
            same_text(&s1.road_layout, &g.road_layout),
        ]
        .iter()
        .filter(|x| **x)
        .count();
    }
    if ok(1) {
        match (&resp.stage2, &gt.stage2_critical) {
            (None, None) => correct += 4,
            (Some(r), Some(g)) => {
                let dp = r.relative_position - g.relative_position;
                correct += [
                    same_text(&r.category, g.category.as_str()),
                    dp.x.abs() <= POSITION_TOLERANCE && dp.y.abs() <= POSITION_TOLERANCE,
                    (r.distance - g.distance).abs() <= POSITION_TOLERANCE,
                    same_text(&r.predicted_behavior, g.predicted_behavior.as_str()),
                ]
                .iter()
                .filter(|x| **x)
                .count();
            }
            _ => {}
        }
    }
    if ok(2) && resp.stage3 == Some(gt.stage3_risk) {
        correct += 1;
    }
    if ok(3) {
        correct += enumerate_meta_actions()
            .iter()
            .filter(|a| {
                resp.stage4.contains_key(a) && resp.stage4.get(a) == gt.stage4_counterfactuals.get(a)
            })
            .count();
    }
    if let (true, Some(p)) = (ok(4), &resp.stage5) {
        correct += (p.action.short == gt.stage5_plan.short) as usize;
        correct += (p.action.long == gt.stage5_plan.long) as usize;
    }
    correct
}

/// Fraction of the 19 structured fields answered correctly.
pub fn score_language(resp: &ResponseRecord, gt: &AnnotationRecord) -> f64 {
    language_correct(resp, gt) as f64 / LANGUAGE_FIELDS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    /// Percent.
    pub accuracy: f64,
    /// Percent of ground-truth Unsafe samples predicted Unsafe; `None`
    /// when the ground truth has no Unsafe sample.
    pub recall: Option<f64>,
}

/// Accuracy and Unsafe-class recall over `(predicted, ground truth)` pairs.
/// A missing prediction counts as wrong.
pub fn score_risk(pairs: &[(Option<RiskClass>, RiskClass)]) -> Result<RiskScore> {
    if pairs.is_empty() {
        return Err(Error::Scoring("no risk labels to score".into()));
    }
    let correct = pairs.iter().filter(|(p, g)| *p == Some(*g)).count();
    let unsafe_gt = pairs.iter().filter(|(_, g)| *g == RiskClass::Unsafe).count();
    let hits = pairs
        .iter()
        .filter(|(p, g)| *g == RiskClass::Unsafe && *p == Some(RiskClass::Unsafe))
        .count();
    Ok(RiskScore {
        accuracy: 100.0 * correct as f64 / pairs.len() as f64,
        recall: (unsafe_gt > 0).then(|| 100.0 * hits as f64 / unsafe_gt as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Mode {
    /// Mean displacement over every ground-truth offset in `(0, h]`.
    #[default]
    Average,
    /// Displacement at the offset `h` alone.
    PointAtHorizon,
}

/// Linear interpolation of `wps` at `offset`, if inside their span.
pub fn position_at(wps: &[Waypoint], offset: f64) -> Option<Vec2> {
    let first = wps.first()?;
    let last = wps.last()?;
    if offset < first.offset - TIME_EPS || offset > last.offset + TIME_EPS {
        return None;
    }
    let idx = wps.partition_point(|w| w.offset < offset - TIME_EPS);
    let after = wps.get(idx)?;
    if (after.offset - offset).abs() <= TIME_EPS || idx == 0 {
        return Some(after.position);
    }
    let before = &wps[idx - 1];
    let alpha = (offset - before.offset) / (after.offset - before.offset);
    Some(before.position.lerp(after.position, alpha))
}

/// L2 displacement at each horizon in `horizons`, with `pred` resampled
/// onto the ground-truth offsets.
pub fn l2_error(pred: &[Waypoint], gt: &[Waypoint], horizons: &[f64], mode: L2Mode) -> Result<Vec<f64>> {
    horizons
        .iter()
        .map(|&h| {
            let offsets: Vec<&Waypoint> = match mode {
                L2Mode::Average => gt
                    .iter()
                    .filter(|w| w.offset > TIME_EPS && w.offset <= h + TIME_EPS)
                    .collect(),
                L2Mode::PointAtHorizon => gt.iter().filter(|w| (w.offset - h).abs() <= TIME_EPS).collect(),
            };
            let dists: Vec<f64> = offsets
                .iter()
                .filter_map(|g| position_at(pred, g.offset).map(|p| p.distance(g.position)))
                .collect();
            if dists.is_empty() {
                return Err(Error::Scoring(format!("no overlapping waypoints up to {h} s")));
            }
            Ok(dists.iter().sum::<f64>() / dists.len() as f64)
        })
        .collect()
}

/// Convenience form returning `(L2@1s, L2@3s)`.
pub fn l2_pair(pred: &[Waypoint], gt: &[Waypoint], mode: L2Mode) -> Result<(f64, f64)> {
    let v = l2_error(pred, gt, &[1.0, 3.0], mode)?;
    Ok((v[0], v[1]))
}

/// Turn waypoints into an oriented trajectory on the rollout grid. Heading
/// follows the local displacement; where the ego does not move it keeps the
/// previous heading, starting from `initial_heading`.
pub fn trajectory_from_waypoints(
    wps: &[Waypoint],
    footprint: Footprint,
    initial_heading: f64,
    cfg: &PlannerConfig,
) -> OrientedTrajectory {
    let positions: Vec<(f64, Vec2)> = (0..=cfg.horizon_steps())
        .map(|k| cfg.offset(k))
        .map_while(|o| position_at(wps, o).map(|p| (o, p)))
        .collect();
    let mut heading = initial_heading;
    let mut poses = Vec::with_capacity(positions.len());
    for (i, &(offset, position)) in positions.iter().enumerate() {
        let step = match (positions.get(i + 1), i.checked_sub(1).map(|j| positions[j])) {
            (Some(&(_, next)), _) => next - position,
            (None, Some((_, prev))) => position - prev,
            (None, None) => Vec2::ZERO,
        };
        if step.norm() > 1e-6 {
            heading = step.y.atan2(step.x);
        }
        poses.push(Pose {
            offset,
            position,
            heading,
        });
    }
    OrientedTrajectory { footprint, poses }
}

/// Whether the ego following `wps` from `t` touches any logged neighbor.
pub fn collides_with_recorded(
    wps: &[Waypoint],
    scenario: &Scenario,
    t: f64,
    cfg: &PlannerConfig,
) -> Result<bool> {
    let ego = scenario.ego();
    let heading = ego
        .sample_at(t, crate::config::MAX_INTERPOLATION_GAP)
        .map(|s| s.heading)
        .unwrap_or(0.0);
    let traj = trajectory_from_waypoints(wps, ego.footprint, heading, cfg);
    for n in scenario.neighbors() {
        let other = OrientedTrajectory::from_recorded(n, t, cfg);
        if trajectories_collide(&traj, &other)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Percent of `collided` flags that are set.
pub fn collision_rate(collided: &[bool]) -> Result<f64> {
    if collided.is_empty() {
        return Err(Error::Scoring("no trajectories to check".into()));
    }
    Ok(100.0 * collided.iter().filter(|c| **c).count() as f64 / collided.len() as f64)
}
