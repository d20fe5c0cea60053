//! World model: agents, trajectory logs, scenes, and collision records.
//!
//! Everything lives in a fixed East-North ground frame in meters, so
//! relative quantities (TTC, L2) do not depend on ego motion.

mod canonical;
mod deepaccident;
mod window;

use serde::{Deserialize, Serialize};

use crate::config::{PlannerConfig, TIME_EPS};
use crate::error::{Error, Result};
use crate::geometry::{lerp_angle, normalize_angle, Vec2};

pub use canonical::write_scenario;
pub use window::{extract_assessment_window, extract_window, ObservationWindow};
pub(crate) use window::current_state;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentCategory {
    Car,
    Truck,
    Motorcycle,
    Cyclist,
    Pedestrian,
    Other,
}

impl AgentCategory {
    pub const ALL: [AgentCategory; 6] = [
        AgentCategory::Car,
        AgentCategory::Truck,
        AgentCategory::Motorcycle,
        AgentCategory::Cyclist,
        AgentCategory::Pedestrian,
        AgentCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentCategory::Car => "car",
            AgentCategory::Truck => "truck",
            AgentCategory::Motorcycle => "motorcycle",
            AgentCategory::Cyclist => "cyclist",
            AgentCategory::Pedestrian => "pedestrian",
            AgentCategory::Other => "other",
        }
    }

    /// Case-insensitive lookup of the canonical name.
    pub fn parse(name: &str) -> Option<Self> {
        let name = name.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(name))
    }

    /// Typical footprint used when a log does not carry one.
    pub fn default_footprint(self) -> Footprint {
        match self {
            AgentCategory::Car | AgentCategory::Other => Footprint::new(4.5, 2.0),
            AgentCategory::Truck => Footprint::new(8.0, 2.5),
            AgentCategory::Motorcycle => Footprint::new(2.2, 0.8),
            AgentCategory::Cyclist => Footprint::new(1.8, 0.6),
            AgentCategory::Pedestrian => Footprint::new(0.6, 0.6),
        }
    }
}

/// Rectangular agent extent, serialized as `[length, width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub const fn new(length: f64, width: f64) -> Self {
        Self { length, width }
    }

    /// Radius of the disc circumscribing the rectangle.
    pub fn circumradius(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }

    fn is_valid(&self) -> bool {
        self.length.is_finite() && self.width.is_finite() && self.length > 0.0 && self.width > 0.0
    }
}

impl From<[f64; 2]> for Footprint {
    fn from([length, width]: [f64; 2]) -> Self {
        Footprint::new(length, width)
    }
}

impl From<Footprint> for [f64; 2] {
    fn from(f: Footprint) -> Self {
        [f.length, f.width]
    }
}

/// Kinematic snapshot of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub agent_id: String,
    pub category: AgentCategory,
    pub footprint: Footprint,
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
}

impl AgentState {
    /// Forward speed along the heading, clamped at zero.
    pub fn longitudinal_speed(&self) -> f64 {
        self.velocity.dot(Vec2::from_heading(self.heading)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
}

/// Time-ordered log of a single agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub agent_id: String,
    pub category: AgentCategory,
    pub footprint: Footprint,
    pub samples: Vec<TrackSample>,
}

impl AgentTrack {
    pub fn start(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    pub fn end(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    pub fn snapshot(&self, sample: &TrackSample) -> AgentState {
        AgentState {
            agent_id: self.agent_id.clone(),
            category: self.category,
            footprint: self.footprint,
            position: sample.position,
            velocity: sample.velocity,
            heading: sample.heading,
        }
    }

    /// Latest sample with `sample.t <= t` (within tolerance).
    pub fn latest_at_or_before(&self, t: f64) -> Option<&TrackSample> {
        let idx = self.samples.partition_point(|s| s.t <= t + TIME_EPS);
        idx.checked_sub(1).map(|i| &self.samples[i])
    }

    /// Sample the track at `t`, interpolating linearly between samples no
    /// more than `max_gap` apart. Heading is interpolated on the circle.
    pub fn sample_at(&self, t: f64, max_gap: f64) -> Option<TrackSample> {
        let idx = self.samples.partition_point(|s| s.t < t - TIME_EPS);
        let after = self.samples.get(idx)?;
        if (after.t - t).abs() <= TIME_EPS {
            return Some(after.clone());
        }
        let before = &self.samples[idx.checked_sub(1)?];
        let gap = after.t - before.t;
        if gap > max_gap + TIME_EPS {
            return None;
        }
        let alpha = (t - before.t) / gap;
        Some(TrackSample {
            t,
            position: before.position.lerp(after.position, alpha),
            velocity: before.velocity.lerp(after.velocity, alpha),
            heading: lerp_angle(before.heading, after.heading, alpha),
        })
    }

    pub fn state_at(&self, t: f64, max_gap: f64) -> Option<AgentState> {
        self.sample_at(t, max_gap).map(|s| self.snapshot(&s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraName {
    Front,
    FrontLeft,
    FrontRight,
}

impl CameraName {
    pub fn as_str(self) -> &'static str {
        match self {
            CameraName::Front => "front",
            CameraName::FrontLeft => "front_left",
            CameraName::FrontRight => "front_right",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "front" => Some(CameraName::Front),
            "front_left" => Some(CameraName::FrontLeft),
            "front_right" => Some(CameraName::FrontRight),
            _ => None,
        }
    }
}

/// Reference to one camera image; the path is opaque and never opened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub t: f64,
    pub camera: CameraName,
    pub image_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub weather: String,
    pub lighting: String,
    pub road_layout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub colliding_agent_id: String,
    pub impact_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scene_id: String,
    pub ego_id: String,
    pub tracks: Vec<AgentTrack>,
    #[serde(default)]
    pub camera_frames: Vec<CameraFrame>,
    pub environment: Environment,
    #[serde(default)]
    pub collision: Option<CollisionRecord>,
}

impl Scenario {
    pub fn track(&self, agent_id: &str) -> Option<&AgentTrack> {
        self.tracks.iter().find(|t| t.agent_id == agent_id)
    }

    pub fn ego(&self) -> &AgentTrack {
        self.track(&self.ego_id)
            .expect("validated scenario always contains its ego track")
    }

    pub fn neighbors(&self) -> impl Iterator<Item = &AgentTrack> {
        self.tracks.iter().filter(move |t| t.agent_id != self.ego_id)
    }

    /// Time span covered by the ego log.
    pub fn ego_span(&self) -> (f64, f64) {
        let ego = self.ego();
        (ego.start().unwrap_or(0.0), ego.end().unwrap_or(0.0))
    }

    /// Time span covered by any track.
    pub fn span(&self) -> (f64, f64) {
        let start = self
            .tracks
            .iter()
            .filter_map(AgentTrack::start)
            .fold(f64::INFINITY, f64::min);
        let end = self
            .tracks
            .iter()
            .filter_map(AgentTrack::end)
            .fold(f64::NEG_INFINITY, f64::max);
        (start, end)
    }

    pub fn is_collision_scene(&self) -> bool {
        self.collision.is_some()
    }

    /// Whether `t` falls in `[impact - preimpact_window, impact]`.
    pub fn in_preimpact_window(&self, t: f64, cfg: &PlannerConfig) -> bool {
        self.collision.as_ref().is_some_and(|c| {
            t >= c.impact_time - cfg.preimpact_window - TIME_EPS && t <= c.impact_time + TIME_EPS
        })
    }

    /// Wrap headings into (-π, π] in place.
    pub(crate) fn normalize(&mut self) {
        for track in &mut self.tracks {
            for s in &mut track.samples {
                s.heading = normalize_angle(s.heading);
            }
        }
    }

    /// Check every structural invariant of a loaded scene.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (ti, track) in self.tracks.iter().enumerate() {
            if !seen.insert(track.agent_id.as_str()) {
                return Err(Error::Structure(format!(
                    "duplicate agent_id {:?}",
                    track.agent_id
                )));
            }
            if !track.footprint.is_valid() {
                return Err(Error::parse(
                    format!("tracks[{ti}].footprint"),
                    format!("footprint of {:?} must be positive and finite", track.agent_id),
                ));
            }
            if track.samples.is_empty() {
                return Err(Error::Structure(format!(
                    "track {:?} has no samples",
                    track.agent_id
                )));
            }
            for (si, s) in track.samples.iter().enumerate() {
                let finite = s.t.is_finite()
                    && s.position.is_finite()
                    && s.velocity.is_finite()
                    && s.heading.is_finite();
                if !finite {
                    return Err(Error::parse(
                        format!("tracks[{ti}].samples[{si}]"),
                        "non-finite value",
                    ));
                }
                if si > 0 && s.t <= track.samples[si - 1].t {
                    return Err(Error::parse(
                        format!("tracks[{ti}].samples[{si}].t"),
                        format!(
                            "timestamp {} of agent {:?} does not increase (previous {})",
                            s.t,
                            track.agent_id,
                            track.samples[si - 1].t
                        ),
                    ));
                }
            }
        }
        if self.track(&self.ego_id).is_none() {
            return Err(Error::Structure(format!(
                "ego_id {:?} has no track",
                self.ego_id
            )));
        }
        let env = &self.environment;
        for (name, value) in [
            ("weather", &env.weather),
            ("lighting", &env.lighting),
            ("road_layout", &env.road_layout),
        ] {
            if value.trim().is_empty() {
                return Err(Error::parse(format!("environment.{name}"), "must not be empty"));
            }
        }
        for (i, frame) in self.camera_frames.iter().enumerate() {
            if !frame.t.is_finite() {
                return Err(Error::parse(format!("camera_frames[{i}].t"), "non-finite"));
            }
        }
        if let Some(c) = &self.collision {
            if c.colliding_agent_id == self.ego_id || self.track(&c.colliding_agent_id).is_none() {
                return Err(Error::Structure(format!(
                    "colliding agent {:?} is not a neighbor track",
                    c.colliding_agent_id
                )));
            }
            let (start, end) = self.span();
            if !(c.impact_time.is_finite()
                && c.impact_time >= start - TIME_EPS
                && c.impact_time <= end + TIME_EPS)
            {
                return Err(Error::Structure(format!(
                    "impact_time {} outside scene span [{start}, {end}]",
                    c.impact_time
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioFormat {
    Canonical,
    DeepaccidentLog,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject unknown keys instead of warning about them.
    pub strict: bool,
}

/// A decoded scenario plus the non-fatal issues found while loading it.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub warnings: Vec<String>,
    pub dropped_agents: usize,
}

/// Decode a scenario from bytes in the given format.
pub fn load_scenario(
    source: &[u8],
    format: ScenarioFormat,
    options: LoadOptions,
) -> Result<LoadedScenario> {
    let loaded = match format {
        ScenarioFormat::Canonical => canonical::load(source, options)?,
        ScenarioFormat::DeepaccidentLog => deepaccident::load(source, options)?,
    };
    for w in &loaded.warnings {
        log::warn!("{}: {w}", loaded.scenario.scene_id);
    }
    Ok(loaded)
}
