//! Meta-actions and closed-form counterfactual ego rollouts.
//!
//! A meta-action fixes the longitudinal acceleration on two segments,
//! `[0, short_horizon)` and `[short_horizon, plan_horizon]`. Heading is held
//! at its value at the analysis time and speed never goes negative.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{PlannerConfig, TIME_EPS};
use crate::geometry::Vec2;
use crate::scenario::{AgentCategory, AgentState, Footprint, ObservationWindow};

/// One longitudinal behavior. Declaration order is the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Accelerate,
    Maintain,
    Decelerate,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Accelerate, Behavior::Maintain, Behavior::Decelerate];

    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Accelerate => "accelerate",
            Behavior::Maintain => "maintain",
            Behavior::Decelerate => "decelerate",
        }
    }

    /// Accepts full names and the short forms `acc`, `main`, `dec`.
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "accelerate" | "acc" | "accel" | "acceleration" => Some(Behavior::Accelerate),
            "maintain" | "main" | "keep" | "cruise" => Some(Behavior::Maintain),
            "decelerate" | "dec" | "decel" | "deceleration" | "brake" => Some(Behavior::Decelerate),
            _ => None,
        }
    }

    /// Signed multiple of the acceleration step.
    pub fn sign(self) -> f64 {
        match self {
            Behavior::Accelerate => 1.0,
            Behavior::Maintain => 0.0,
            Behavior::Decelerate => -1.0,
        }
    }
}

/// A root-to-leaf path of the two-layer tree: (short-term, long-term).
///
/// The derived ordering is lexicographic on `(short, long)`, which is the
/// canonical order used for deterministic tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetaAction {
    pub short: Behavior,
    pub long: Behavior,
}

impl MetaAction {
    pub const fn new(short: Behavior, long: Behavior) -> Self {
        Self { short, long }
    }

    /// Stable identifier such as `maintain_decelerate`.
    pub fn key(&self) -> String {
        format!("{}_{}", self.short.as_str(), self.long.as_str())
    }

    /// Parse a key like `maintain_decelerate`, `(Main, Dec)` or `acc-acc`.
    pub fn parse(text: &str) -> Option<Self> {
        let tokens: Vec<&str> = text
            .split(|c: char| !c.is_ascii_alphabetic())
            .filter(|t| !t.is_empty())
            .collect();
        match tokens.as_slice() {
            [short, long] => Some(Self::new(Behavior::parse(short)?, Behavior::parse(long)?)),
            _ => None,
        }
    }
}

impl fmt::Display for MetaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl Serialize for MetaAction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for MetaAction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        MetaAction::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown meta-action {raw:?}")))
    }
}

/// The full action space in canonical order: 3 short × 3 long branches.
pub fn enumerate_meta_actions() -> Vec<MetaAction> {
    Behavior::ALL
        .iter()
        .flat_map(|&short| Behavior::ALL.iter().map(move |&long| MetaAction::new(short, long)))
        .collect()
}

/// Piecewise-constant longitudinal acceleration over the planning horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelProfile {
    /// Acceleration on `[0, short_horizon)`.
    pub short_accel: f64,
    /// Acceleration on `[short_horizon, plan_horizon]`.
    pub long_accel: f64,
    pub short_horizon: f64,
    pub plan_horizon: f64,
}

impl AccelProfile {
    pub fn accel_at(&self, offset: f64) -> f64 {
        if offset < self.short_horizon {
            self.short_accel
        } else {
            self.long_accel
        }
    }
}

pub fn to_accel_profile(action: MetaAction, cfg: &PlannerConfig) -> AccelProfile {
    AccelProfile {
        short_accel: action.short.sign() * cfg.accel_step,
        long_accel: action.long.sign() * cfg.accel_step,
        short_horizon: cfg.short_horizon,
        plan_horizon: cfg.plan_horizon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutSample {
    /// Seconds after the analysis time.
    pub offset: f64,
    pub position: Vec2,
    /// Scalar speed along the heading, never negative.
    pub speed: f64,
    pub heading: f64,
    /// Distance travelled since offset 0.
    pub distance: f64,
}

impl RolloutSample {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading(self.heading) * self.speed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoRollout {
    pub meta_action: MetaAction,
    pub samples: Vec<RolloutSample>,
}

impl EgoRollout {
    /// Total displacement over the horizon.
    pub fn progress(&self) -> f64 {
        self.samples.last().map(|s| s.distance).unwrap_or(0.0)
    }
}

/// Advance `(distance, speed)` by `span` seconds under constant `accel`,
/// holding speed at zero once it gets there.
pub(crate) fn advance(speed: f64, accel: f64, span: f64) -> (f64, f64) {
    if accel < 0.0 {
        let stop = speed / -accel;
        if span >= stop {
            return (speed * stop + 0.5 * accel * stop * stop, 0.0);
        }
    }
    (speed * span + 0.5 * accel * span * span, (speed + accel * span).max(0.0))
}

/// Roll the ego out under `profile`, sampling at multiples of `rollout_dt`.
pub fn rollout(
    ego: &AgentState,
    action: MetaAction,
    profile: &AccelProfile,
    cfg: &PlannerConfig,
) -> EgoRollout {
    let v0 = ego.longitudinal_speed();
    let dir = Vec2::from_heading(ego.heading);
    let boundary = cfg.short_steps();
    let (boundary_dist, boundary_speed) = advance(v0, profile.short_accel, profile.short_horizon);

    let samples = (0..=cfg.horizon_steps())
        .map(|k| {
            let (distance, speed) = if k <= boundary {
                advance(v0, profile.short_accel, cfg.offset(k))
            } else {
                let (d, s) = advance(boundary_speed, profile.long_accel, cfg.offset(k - boundary));
                (boundary_dist + d, s)
            };
            RolloutSample {
                offset: cfg.offset(k),
                position: ego.position + dir * distance,
                speed,
                heading: ego.heading,
                distance,
            }
        })
        .collect();
    EgoRollout {
        meta_action: action,
        samples,
    }
}

/// Sampled future of one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedTrack {
    pub agent_id: String,
    pub category: AgentCategory,
    pub footprint: Footprint,
    /// Seconds between the anchor sample and the analysis time.
    pub staleness: f64,
    pub samples: Vec<PredictedSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedSample {
    pub offset: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
}

impl PredictedTrack {
    pub fn is_stale(&self) -> bool {
        self.staleness > TIME_EPS
    }
}

/// Extrapolate every neighbor in the window over `[t, t + plan_horizon]`.
pub fn predict_neighbors(window: &ObservationWindow, cfg: &PlannerConfig) -> Vec<PredictedTrack> {
    window
        .neighbor_histories
        .iter()
        .filter_map(|track| {
            let anchor = track.latest_at_or_before(window.t)?;
            let staleness = (window.t - anchor.t).max(0.0);
            let staleness = if staleness <= TIME_EPS { 0.0 } else { staleness };
            if staleness > 0.0 {
                log::warn!(
                    "{}: neighbor {} last seen {staleness:.3} s before t = {}; extrapolating",
                    window.scene_id,
                    track.agent_id,
                    window.t
                );
            }
            let samples = (0..=cfg.horizon_steps())
                .map(|k| {
                    let offset = cfg.offset(k);
                    PredictedSample {
                        offset,
                        position: anchor.position + anchor.velocity * (offset + staleness),
                        velocity: anchor.velocity,
                        heading: anchor.heading,
                    }
                })
                .collect();
            Some(PredictedTrack {
                agent_id: track.agent_id.clone(),
                category: track.category,
                footprint: track.footprint,
                staleness,
                samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{extract_window, AgentCategory};
    use crate::synthetic::{AgentSpec, SceneBuilder};
    use Behavior::*;

    fn ego(v0: f64) -> AgentState {
        AgentState {
            agent_id: "ego".into(),
            category: AgentCategory::Car,
            footprint: Footprint::new(4.0, 2.0),
            position: Vec2::ZERO,
            velocity: Vec2::new(v0, 0.0),
            heading: 0.0,
        }
    }

    fn roll(v0: f64, a: MetaAction) -> EgoRollout {
        let cfg = PlannerConfig::default();
        rollout(&ego(v0), a, &to_accel_profile(a, &cfg), &cfg)
    }

    #[test]
    fn nine_actions_in_canonical_order() {
        let actions = enumerate_meta_actions();
        assert_eq!(actions.len(), 9);
        assert_eq!(actions[0], MetaAction::new(Accelerate, Accelerate));
        assert_eq!(actions[8], MetaAction::new(Decelerate, Decelerate));
        assert!(actions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn profile_sign_mapping() {
        let cfg = PlannerConfig::default();
        let p = to_accel_profile(MetaAction::new(Maintain, Maintain), &cfg);
        assert_eq!((p.short_accel, p.long_accel), (0.0, 0.0));
        let p = to_accel_profile(MetaAction::new(Accelerate, Decelerate), &cfg);
        assert_eq!((p.short_accel, p.long_accel), (2.0, -2.0));
        let p = to_accel_profile(MetaAction::new(Decelerate, Accelerate), &cfg);
        assert_eq!((p.short_accel, p.long_accel), (-2.0, 2.0));
        assert_eq!(p.accel_at(0.99), -2.0);
        assert_eq!(p.accel_at(1.0), 2.0);
    }

    #[test]
    fn accelerate_one_second() {
        let r = roll(10.0, MetaAction::new(Accelerate, Maintain));
        let s = r.samples[10];
        assert_eq!(s.offset, 1.0);
        assert!((s.speed - 12.0).abs() < 1e-12);
        assert!((s.position.x - 11.0).abs() < 1e-12);
    }

    #[test]
    fn zero_speed_clamp() {
        let r = roll(2.0, MetaAction::new(Decelerate, Decelerate));
        assert_eq!(r.samples.len(), 31);
        assert!(r.samples[10].speed.abs() < 1e-12);
        assert!((r.samples[10].position.x - 1.0).abs() < 1e-12);
        for s in &r.samples[10..] {
            assert_eq!(s.speed, 0.0);
            assert!((s.position.x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clamp_releases_when_accel_turns_positive() {
        let r = roll(1.0, MetaAction::new(Decelerate, Accelerate));
        assert_eq!(r.samples[10].speed, 0.0);
        assert!((r.samples[30].speed - 4.0).abs() < 1e-12);
        assert!((r.progress() - (0.25 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn maintain_then_decelerate() {
        let r = roll(10.0, MetaAction::new(Maintain, Decelerate));
        let last = r.samples.last().unwrap();
        assert!((last.position.x - 26.0).abs() < 1e-12);
        assert!((last.speed - 6.0).abs() < 1e-12);
    }

    #[test]
    fn heading_is_held() {
        let mut e = ego(5.0);
        e.heading = 1.0;
        e.velocity = Vec2::from_heading(1.0) * 5.0;
        let cfg = PlannerConfig::default();
        let a = MetaAction::new(Maintain, Maintain);
        let r = rollout(&e, a, &to_accel_profile(a, &cfg), &cfg);
        let last = r.samples.last().unwrap();
        assert!((last.position - Vec2::from_heading(1.0) * 15.0).norm() < 1e-12);
        assert!(r.samples.iter().all(|s| s.heading == 1.0));
    }

    #[test]
    fn action_key_roundtrip_and_aliases() {
        for a in enumerate_meta_actions() {
            assert_eq!(MetaAction::parse(&a.key()), Some(a));
        }
        assert_eq!(
            MetaAction::parse("(Main, Dec)"),
            Some(MetaAction::new(Maintain, Decelerate))
        );
        assert_eq!(MetaAction::parse("acc"), None);
    }

    fn window_with_neighbor(pos: Vec2, vel: Vec2, last_seen: f64) -> ObservationWindow {
        let mut s = SceneBuilder::new("p", 0.0, 3.0)
            .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::ZERO))
            .neighbor(AgentSpec::car("n", pos - vel * 2.0, vel))
            .build();
        let n = s.tracks.iter_mut().find(|t| t.agent_id == "n").unwrap();
        n.samples.retain(|x| x.t <= last_seen + 1e-9);
        extract_window(&s, 2.0, &PlannerConfig::default()).unwrap()
    }

    #[test]
    fn constant_velocity_prediction() {
        let cfg = PlannerConfig::default();
        let w = window_with_neighbor(Vec2::new(20.0, 0.0), Vec2::new(-10.0, 0.0), 3.0);
        let p = predict_neighbors(&w, &cfg);
        assert_eq!(p.len(), 1);
        assert!(!p[0].is_stale());
        let end = p[0].samples.last().unwrap();
        assert_eq!(end.offset, 3.0);
        assert!((end.position - Vec2::new(-10.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn stationary_prediction() {
        let cfg = PlannerConfig::default();
        let w = window_with_neighbor(Vec2::new(5.0, 5.0), Vec2::ZERO, 3.0);
        let p = predict_neighbors(&w, &cfg);
        assert!(p[0].samples.iter().all(|s| s.position == Vec2::new(5.0, 5.0)));
    }

    #[test]
    fn stale_prediction_anchors_on_last_sample() {
        let cfg = PlannerConfig::default();
        let vel = Vec2::new(-10.0, 1.0);
        let w = window_with_neighbor(Vec2::new(20.0, 0.0), vel, 1.8);
        let p = predict_neighbors(&w, &cfg);
        assert!(p[0].is_stale());
        assert!((p[0].staleness - 0.2).abs() < 1e-9);
        let last_pos = Vec2::new(20.0, 0.0) - vel * 0.2;
        for s in &p[0].samples {
            let expected = last_pos + vel * (s.offset + 0.2);
            assert!((s.position - expected).norm() < 1e-9);
        }
    }
}
