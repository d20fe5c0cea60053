//! Time-to-collision, Safe/Unsafe labels and critical-object selection.
//!
//! TTC uses constant-velocity extrapolation with each agent approximated by
//! the disc circumscribing its footprint. Physical contact between planned
//! trajectories uses the tighter oriented-rectangle test in [`collision`].

pub mod collision;

use serde::{Deserialize, Serialize};

use crate::config::{PlannerConfig, TIME_EPS};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{EgoRollout, PredictedTrack};
use crate::scenario::{AgentCategory, AgentState, ObservationWindow, Scenario};

pub use collision::{boxes_overlap, trajectories_collide, OrientedBox, OrientedTrajectory, Pose};

#[derive(Debug, Clone, PartialEq)]
pub struct TtcResult {
    pub agent_id: String,
    /// Seconds until disc contact, `f64::INFINITY` if never.
    pub ttc: f64,
    /// Smallest future center distance under constant velocity.
    pub closest_approach: f64,
}

/// Disc-model TTC between two agents under constant velocity.
pub fn instantaneous_ttc(ego: &AgentState, other: &AgentState) -> TtcResult {
    let rel_pos = other.position - ego.position;
    let rel_vel = other.velocity - ego.velocity;
    let contact = ego.footprint.circumradius() + other.footprint.circumradius();
    let speed_sq = rel_vel.norm_squared();

    let t_closest = if speed_sq > 0.0 {
        (-rel_pos.dot(rel_vel) / speed_sq).max(0.0)
    } else {
        0.0
    };
    let closest_approach = (rel_pos + rel_vel * t_closest).norm();

    let c = rel_pos.norm_squared() - contact * contact;
    let ttc = if c <= 0.0 {
        0.0
    } else {
        let b = 2.0 * rel_pos.dot(rel_vel);
        let disc = b * b - 4.0 * speed_sq * c;
        if speed_sq == 0.0 || b >= 0.0 || disc < 0.0 {
            f64::INFINITY
        } else {
            // Smaller root of a·τ² + b·τ + c, written to avoid cancellation.
            2.0 * c / (-b + disc.sqrt())
        }
    };
    TtcResult {
        agent_id: other.agent_id.clone(),
        ttc,
        closest_approach,
    }
}

/// Minimum TTC along a rollout and where it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutTtc {
    pub min_ttc: f64,
    pub agent_id: Option<String>,
    pub offset: Option<f64>,
}

/// Evaluate TTC between the rolled-out ego and every predicted neighbor at
/// each grid offset and keep the minimum.
pub fn rollout_min_ttc(
    ego: &AgentState,
    rollout: &EgoRollout,
    neighbors: &[PredictedTrack],
) -> Result<RolloutTtc> {
    let mut best = RolloutTtc {
        min_ttc: f64::INFINITY,
        agent_id: None,
        offset: None,
    };
    for track in neighbors {
        if track.samples.len() != rollout.samples.len() {
            return Err(Error::GridMismatch(format!(
                "neighbor {} has {} samples, rollout has {}",
                track.agent_id,
                track.samples.len(),
                rollout.samples.len()
            )));
        }
    }
    for (k, ego_sample) in rollout.samples.iter().enumerate() {
        let ego_state = AgentState {
            position: ego_sample.position,
            velocity: ego_sample.velocity(),
            heading: ego_sample.heading,
            ..ego.clone()
        };
        for track in neighbors {
            let s = &track.samples[k];
            if (s.offset - ego_sample.offset).abs() > TIME_EPS {
                return Err(Error::GridMismatch(format!(
                    "neighbor {} offset {} vs rollout offset {}",
                    track.agent_id, s.offset, ego_sample.offset
                )));
            }
            let other = AgentState {
                agent_id: track.agent_id.clone(),
                category: track.category,
                footprint: track.footprint,
                position: s.position,
                velocity: s.velocity,
                heading: s.heading,
            };
            let ttc = instantaneous_ttc(&ego_state, &other).ttc;
            if ttc < best.min_ttc {
                best = RolloutTtc {
                    min_ttc: ttc,
                    agent_id: Some(track.agent_id.clone()),
                    offset: Some(ego_sample.offset),
                };
            }
        }
        if best.min_ttc == 0.0 {
            break;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskClass {
    Safe,
    Unsafe,
}

impl RiskClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskClass::Safe => "Safe",
            RiskClass::Unsafe => "Unsafe",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "safe" => Some(RiskClass::Safe),
            "unsafe" => Some(RiskClass::Unsafe),
            _ => None,
        }
    }

    pub fn from_ttc(ttc: f64, threshold: f64) -> Self {
        if ttc < threshold {
            RiskClass::Unsafe
        } else {
            RiskClass::Safe
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskReason {
    TtcBelowThreshold,
    PreimpactWindow,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskLabel {
    pub label: RiskClass,
    pub min_ttc: f64,
    pub critical_agent: Option<String>,
    pub reason: RiskReason,
}

fn min_current_ttc(window: &ObservationWindow) -> (f64, Option<String>) {
    let ego = window.ego_state();
    window
        .neighbor_states()
        .iter()
        .map(|(n, _)| instantaneous_ttc(&ego, n))
        .fold((f64::INFINITY, None), |(best, id), r| {
            if r.ttc < best {
                (r.ttc, Some(r.agent_id))
            } else {
                (best, id)
            }
        })
}

/// Current-frame risk: Unsafe when inside a recorded pre-impact window or
/// when any neighbor's TTC is below the threshold. The pre-impact reason
/// takes precedence when both hold.
pub fn label_current_risk(
    window: &ObservationWindow,
    scenario: &Scenario,
    cfg: &PlannerConfig,
) -> RiskLabel {
    let (min_ttc, agent) = min_current_ttc(window);
    if scenario.in_preimpact_window(window.t, cfg) {
        let collision = scenario.collision.as_ref().expect("pre-impact implies record");
        RiskLabel {
            label: RiskClass::Unsafe,
            min_ttc,
            critical_agent: Some(collision.colliding_agent_id.clone()),
            reason: RiskReason::PreimpactWindow,
        }
    } else if min_ttc < cfg.ttc_threshold {
        RiskLabel {
            label: RiskClass::Unsafe,
            min_ttc,
            critical_agent: agent,
            reason: RiskReason::TtcBelowThreshold,
        }
    } else {
        RiskLabel {
            label: RiskClass::Safe,
            min_ttc,
            critical_agent: agent,
            reason: RiskReason::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalObject {
    pub agent_id: String,
    pub category: AgentCategory,
    /// Position in the ego frame: +x forward, +y left.
    pub relative_position: Vec2,
    pub distance: f64,
    pub ttc: f64,
    /// Velocity rotated into the ego frame.
    pub relative_heading_velocity: Vec2,
    /// Chosen only because it is nearest; every TTC was infinite.
    pub low_priority: bool,
}

fn describe(ego: &AgentState, other: &AgentState, low_priority: bool) -> CriticalObject {
    let offset = other.position - ego.position;
    CriticalObject {
        agent_id: other.agent_id.clone(),
        category: other.category,
        relative_position: offset.to_frame(ego.heading),
        distance: offset.norm(),
        ttc: instantaneous_ttc(ego, other).ttc,
        relative_heading_velocity: other.velocity.to_frame(ego.heading),
        low_priority,
    }
}

/// Select the critical object: the recorded colliding agent inside the
/// pre-impact window, else the minimum finite TTC neighbor, else the nearest
/// neighbor (flagged low priority), else none.
pub fn identify_critical_object(
    window: &ObservationWindow,
    scenario: &Scenario,
    cfg: &PlannerConfig,
) -> Option<CriticalObject> {
    let ego = window.ego_state();
    if scenario.in_preimpact_window(window.t, cfg) {
        let id = &scenario.collision.as_ref()?.colliding_agent_id;
        let state = window
            .neighbor(id)
            .or_else(|| scenario.track(id))
            .and_then(|track| crate::scenario::current_state(track, window.t));
        if let Some((state, _)) = state {
            return Some(describe(&ego, &state, false));
        }
    }

    let neighbors = window.neighbor_states();
    let by_ttc = neighbors
        .iter()
        .map(|(n, _)| (n, instantaneous_ttc(&ego, n).ttc))
        .filter(|(_, ttc)| ttc.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((n, _)) = by_ttc {
        return Some(describe(&ego, n, false));
    }
    neighbors
        .iter()
        .min_by(|a, b| {
            a.0.position
                .distance(ego.position)
                .total_cmp(&b.0.position.distance(ego.position))
        })
        .map(|(n, _)| describe(&ego, n, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{extract_assessment_window as extract_window, Footprint};
    use crate::synthetic::{self, AgentSpec, SceneBuilder};

    fn agent(id: &str, pos: (f64, f64), vel: (f64, f64)) -> AgentState {
        AgentState {
            agent_id: id.into(),
            category: AgentCategory::Car,
            footprint: Footprint::new(4.0, 2.0),
            position: Vec2::new(pos.0, pos.1),
            velocity: Vec2::new(vel.0, vel.1),
            heading: 0.0,
        }
    }

    #[test]
    fn head_on_ttc() {
        let r = instantaneous_ttc(&agent("e", (0.0, 0.0), (10.0, 0.0)), &agent("o", (60.0, 0.0), (-10.0, 0.0)));
        let expected = (60.0 - 20f64.sqrt()) / 20.0;
        assert!((r.ttc - expected).abs() < 1e-12);
        assert!((r.ttc - 2.776).abs() < 1e-3);
    }

    #[test]
    fn diverging_is_infinite() {
        let r = instantaneous_ttc(&agent("e", (0.0, 0.0), (-5.0, 0.0)), &agent("o", (20.0, 0.0), (5.0, 0.0)));
        assert!(r.ttc.is_infinite());
        assert_eq!(r.closest_approach, 20.0);
    }

    #[test]
    fn overlapping_is_zero() {
        let r = instantaneous_ttc(&agent("e", (0.0, 0.0), (0.0, 0.0)), &agent("o", (3.0, 1.0), (5.0, 0.0)));
        assert_eq!(r.ttc, 0.0);
    }

    #[test]
    fn near_miss_is_infinite() {
        // Passes 6 m abeam; contact distance is sqrt(20) ≈ 4.47 m.
        let r = instantaneous_ttc(&agent("e", (0.0, 0.0), (10.0, 0.0)), &agent("o", (50.0, 6.0), (-10.0, 0.0)));
        assert!(r.ttc.is_infinite());
        assert!((r.closest_approach - 6.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_labels() {
        let cfg = PlannerConfig::default();
        let s = synthetic::head_on("h", 2.0, 2.5);
        let w = extract_window(&s, 2.0, &cfg).unwrap();
        let l = label_current_risk(&w, &s, &cfg);
        assert_eq!(l.label, RiskClass::Unsafe);
        assert_eq!(l.reason, RiskReason::TtcBelowThreshold);
        assert!((l.min_ttc - 2.5).abs() < 1e-9);

        let s = synthetic::constant_speed("c", 10.0);
        let w = extract_window(&s, 2.0, &cfg).unwrap();
        let l = label_current_risk(&w, &s, &cfg);
        assert_eq!(l.label, RiskClass::Safe);
        assert_eq!(l.reason, RiskReason::None);
        assert!(l.min_ttc.is_infinite());
    }

    #[test]
    fn preimpact_label_overrides_large_ttc() {
        let cfg = PlannerConfig::default();
        let mut s = synthetic::constant_speed("c", 10.0);
        s.tracks.push(
            SceneBuilder::new("x", 0.0, 10.0)
                .ego(AgentSpec::car("far", Vec2::new(0.0, 25.0), Vec2::new(10.0, 0.0)))
                .build()
                .tracks
                .remove(0),
        );
        s.collision = Some(crate::scenario::CollisionRecord {
            colliding_agent_id: "far".into(),
            impact_time: 5.0,
        });
        let w = extract_window(&s, 4.0, &cfg).unwrap();
        let l = label_current_risk(&w, &s, &cfg);
        assert_eq!(l.label, RiskClass::Unsafe);
        assert_eq!(l.reason, RiskReason::PreimpactWindow);
        let crit = identify_critical_object(&w, &s, &cfg).unwrap();
        assert_eq!(crit.agent_id, "far");
    }

    #[test]
    fn critical_object_prefers_min_ttc() {
        let cfg = PlannerConfig::default();
        // Leads in the ego lane; TTC = (gap - sqrt(20)) / closing speed.
        let r = 20f64.sqrt();
        let lead = |id: &str, speed: f64, ttc: f64| {
            let gap_at_2 = r + (10.0 - speed) * ttc;
            AgentSpec::car(id, Vec2::new(20.0 + gap_at_2 - 2.0 * speed, 0.0), Vec2::new(speed, 0.0))
                .footprint(4.0, 2.0)
        };
        let s = SceneBuilder::new("two", 0.0, 4.0)
            .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::new(10.0, 0.0)).footprint(4.0, 2.0))
            .neighbor(lead("far", 7.0, 7.0))
            .neighbor(lead("near", 5.0, 2.8))
            .build();
        let w = extract_window(&s, 2.0, &cfg).unwrap();
        let ttcs: Vec<f64> = w
            .neighbor_states()
            .iter()
            .map(|(n, _)| instantaneous_ttc(&w.ego_state(), n).ttc)
            .collect();
        assert!((ttcs[0] - 7.0).abs() < 1e-9, "{ttcs:?}");
        assert!((ttcs[1] - 2.8).abs() < 1e-9, "{ttcs:?}");
        let c = identify_critical_object(&w, &s, &cfg).unwrap();
        assert_eq!(c.agent_id, "near");
        assert!(!c.low_priority);
    }

    #[test]
    fn critical_object_fallbacks() {
        let cfg = PlannerConfig::default();
        let s = synthetic::constant_speed("c", 10.0);
        let w = extract_window(&s, 2.0, &cfg).unwrap();
        assert!(identify_critical_object(&w, &s, &cfg).is_none());

        let s = SceneBuilder::new("p", 0.0, 4.0)
            .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::new(10.0, 0.0)))
            .neighbor(AgentSpec::car("a", Vec2::new(0.0, 10.0), Vec2::new(10.0, 0.0)))
            .neighbor(AgentSpec::car("b", Vec2::new(0.0, -8.0), Vec2::new(10.0, 0.0)))
            .build();
        let w = extract_window(&s, 2.0, &cfg).unwrap();
        let c = identify_critical_object(&w, &s, &cfg).unwrap();
        assert_eq!(c.agent_id, "b");
        assert!(c.low_priority);
        assert!((c.relative_position - Vec2::new(0.0, -8.0)).norm() < 1e-9);
    }
}
