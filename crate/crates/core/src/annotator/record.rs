use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{enumerate_meta_actions, Behavior, MetaAction};
use crate::risk::{CriticalObject, RiskClass};
use crate::scenario::{AgentCategory, Environment};

/// Coarse motion of the critical object relative to the ego.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictedBehavior {
    #[serde(rename = "approaching")]
    Approaching,
    #[serde(rename = "crossing from left")]
    CrossingFromLeft,
    #[serde(rename = "crossing from right")]
    CrossingFromRight,
    #[serde(rename = "leading")]
    Leading,
    #[serde(rename = "stationary")]
    Stationary,
}

/// Speeds below this are reported as stationary (m/s).
const STATIONARY_SPEED: f64 = 0.5;

impl PredictedBehavior {
    pub const ALL: [PredictedBehavior; 5] = [
        PredictedBehavior::Approaching,
        PredictedBehavior::CrossingFromLeft,
        PredictedBehavior::CrossingFromRight,
        PredictedBehavior::Leading,
        PredictedBehavior::Stationary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PredictedBehavior::Approaching => "approaching",
            PredictedBehavior::CrossingFromLeft => "crossing from left",
            PredictedBehavior::CrossingFromRight => "crossing from right",
            PredictedBehavior::Leading => "leading",
            PredictedBehavior::Stationary => "stationary",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let norm: String = text
            .trim()
            .to_ascii_lowercase()
            .split(|c: char| c == '_' || c == '-' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        Self::ALL.into_iter().find(|b| b.as_str() == norm)
    }

    /// Classify from the object's position and velocity in the ego frame.
    pub fn classify(relative_position: Vec2, ego_frame_velocity: Vec2) -> Self {
        let (lon, lat) = (ego_frame_velocity.x, ego_frame_velocity.y);
        if ego_frame_velocity.norm() < STATIONARY_SPEED {
            PredictedBehavior::Stationary
        } else if lat.abs() > lon.abs() {
            // Left is +y; moving toward -y means coming from the left.
            if lat < 0.0 {
                PredictedBehavior::CrossingFromLeft
            } else {
                PredictedBehavior::CrossingFromRight
            }
        } else if lon > 0.0 && relative_position.x >= 0.0 {
            PredictedBehavior::Leading
        } else {
            PredictedBehavior::Approaching
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalStage {
    pub agent_id: String,
    pub category: AgentCategory,
    /// Ego frame, meters: +x forward, +y left.
    pub relative_position: Vec2,
    pub distance: f64,
    pub predicted_behavior: PredictedBehavior,
}

impl From<&CriticalObject> for CriticalStage {
    fn from(c: &CriticalObject) -> Self {
        Self {
            agent_id: c.agent_id.clone(),
            category: c.category,
            relative_position: c.relative_position,
            distance: c.distance,
            predicted_behavior: PredictedBehavior::classify(
                c.relative_position,
                c.relative_heading_velocity,
            ),
        }
    }
}

/// Planned position `offset` seconds after the analysis time, serialized
/// as `[offset, x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Waypoint {
    pub offset: f64,
    pub position: Vec2,
}

impl From<[f64; 3]> for Waypoint {
    fn from([offset, x, y]: [f64; 3]) -> Self {
        Waypoint {
            offset,
            position: Vec2::new(x, y),
        }
    }
}

impl From<Waypoint> for [f64; 3] {
    fn from(w: Waypoint) -> Self {
        [w.offset, w.position.x, w.position.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStage {
    pub short: Behavior,
    pub long: Behavior,
    pub waypoints: Vec<Waypoint>,
}

impl PlanStage {
    pub fn meta_action(&self) -> MetaAction {
        MetaAction::new(self.short, self.long)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtSource {
    RecordedFuture,
    PostIntervention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub is_collision_scene: bool,
    pub gt_source: GtSource,
}

/// Five-stage ground truth for one analysis frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub sample_id: String,
    pub scene_id: String,
    pub analysis_time: f64,
    pub stage1_scene: Environment,
    pub stage2_critical: Option<CriticalStage>,
    pub stage3_risk: RiskClass,
    pub stage4_counterfactuals: BTreeMap<MetaAction, RiskClass>,
    pub stage5_plan: PlanStage,
    pub provenance: Provenance,
}

/// `<scene_id>_<millis>`, also the record's file stem.
pub fn sample_id(scene_id: &str, t: f64) -> String {
    format!("{scene_id}_{}", (t * 1000.0).round() as i64)
}

impl AnnotationRecord {
    pub fn file_name(&self) -> String {
        format!("{}.json", self.sample_id)
    }

    pub fn validate(&self, plan_horizon: f64) -> Result<()> {
        for a in enumerate_meta_actions() {
            if !self.stage4_counterfactuals.contains_key(&a) {
                return Err(Error::Structure(format!(
                    "{}: stage4 lacks {a}",
                    self.sample_id
                )));
            }
        }
        if self.stage4_counterfactuals.len() != 9 {
            return Err(Error::Structure(format!(
                "{}: stage4 has {} entries",
                self.sample_id,
                self.stage4_counterfactuals.len()
            )));
        }
        let w = &self.stage5_plan.waypoints;
        let (Some(first), Some(last)) = (w.first(), w.last()) else {
            return Err(Error::Structure(format!("{}: no waypoints", self.sample_id)));
        };
        if first.offset.abs() > 1e-6 || (last.offset - plan_horizon).abs() > 1e-6 {
            return Err(Error::Structure(format!(
                "{}: waypoints must span [0, {plan_horizon}]",
                self.sample_id
            )));
        }
        if w.windows(2).any(|p| p[1].offset <= p[0].offset) {
            return Err(Error::Structure(format!(
                "{}: waypoint offsets must increase",
                self.sample_id
            )));
        }
        Ok(())
    }

    /// Canonical file bytes: fixed six-decimal floats.
    pub fn to_json(&self) -> Vec<u8> {
        crate::json::to_fixed_json(self).expect("record serialization is infallible")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| {
            Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behavior_classification() {
        let ahead = Vec2::new(20.0, 0.0);
        assert_eq!(PredictedBehavior::classify(ahead, Vec2::new(0.1, 0.2)), PredictedBehavior::Stationary);
        assert_eq!(PredictedBehavior::classify(ahead, Vec2::new(8.0, 1.0)), PredictedBehavior::Leading);
        assert_eq!(PredictedBehavior::classify(ahead, Vec2::new(-8.0, 1.0)), PredictedBehavior::Approaching);
        assert_eq!(
            PredictedBehavior::classify(Vec2::new(-10.0, 0.0), Vec2::new(12.0, 0.0)),
            PredictedBehavior::Approaching
        );
        assert_eq!(
            PredictedBehavior::classify(Vec2::new(15.0, 10.0), Vec2::new(0.0, -9.0)),
            PredictedBehavior::CrossingFromLeft
        );
        assert_eq!(
            PredictedBehavior::classify(Vec2::new(15.0, -10.0), Vec2::new(1.0, 9.0)),
            PredictedBehavior::CrossingFromRight
        );
    }

    #[test]
    fn behavior_parse_is_lenient() {
        assert_eq!(PredictedBehavior::parse(" Crossing_From_Left "), Some(PredictedBehavior::CrossingFromLeft));
        assert_eq!(PredictedBehavior::parse("LEADING"), Some(PredictedBehavior::Leading));
        assert_eq!(PredictedBehavior::parse("overtaking"), None);
    }

    #[test]
    fn sample_ids() {
        assert_eq!(sample_id("scene_001", 7.9), "scene_001_7900");
        assert_eq!(sample_id("a", 1.5), "a_1500");
    }
}
