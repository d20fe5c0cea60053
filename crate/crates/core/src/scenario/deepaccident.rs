//! Adapter for DeepAccident-style per-frame trajectory logs.
//!
//! The layout is line oriented. Metadata lines start with `#`:
//!
//! ```text
//! # scene_id: town03_type001_seq07
//! # ego_id: ego_vehicle
//! # weather: clear
//! # lighting: daytime
//! # road_layout: four-way intersection
//! # collision: other_vehicle 7.95
//! # camera: 0.5 front images/front/0005.jpg
//! ```
//!
//! Every other non-empty line is one agent record:
//! `t agent_id type x y yaw vx vy [length width]`. Footprints absent from
//! the log fall back to [`AgentCategory::default_footprint`]. Records whose
//! type does not map to an agent category (props, signals) are dropped.

use std::collections::BTreeSet;

use super::{
    AgentCategory, AgentTrack, CameraFrame, CameraName, CollisionRecord, Environment, Footprint,
    LoadOptions, LoadedScenario, Scenario, TrackSample,
};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

fn map_type(raw: &str) -> Option<AgentCategory> {
    let category = match raw.to_ascii_lowercase().as_str() {
        "car" | "vehicle" | "van" | "sedan" | "suv" => AgentCategory::Car,
        "truck" | "bus" => AgentCategory::Truck,
        "motorcycle" | "motorbike" => AgentCategory::Motorcycle,
        "cyclist" | "bicycle" | "bike" => AgentCategory::Cyclist,
        "pedestrian" | "walker" | "person" => AgentCategory::Pedestrian,
        "other" => AgentCategory::Other,
        _ => return None,
    };
    Some(category)
}

fn field<'a>(
    parts: &[&'a str],
    idx: usize,
    name: &str,
    line_no: usize,
) -> Result<&'a str> {
    parts
        .get(idx)
        .copied()
        .ok_or_else(|| Error::parse(format!("line {line_no}, field `{name}`"), "missing value"))
}

fn number(parts: &[&str], idx: usize, name: &str, line_no: usize) -> Result<f64> {
    let raw = field(parts, idx, name, line_no)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            format!("line {line_no}, field `{name}`"),
            format!("expected a finite number, got {raw:?}"),
        )),
    }
}

#[derive(Default)]
struct Header {
    scene_id: Option<String>,
    ego_id: Option<String>,
    weather: Option<String>,
    lighting: Option<String>,
    road_layout: Option<String>,
    collision: Option<CollisionRecord>,
    cameras: Vec<CameraFrame>,
}

pub(super) fn load(source: &[u8], options: LoadOptions) -> Result<LoadedScenario> {
    let text = std::str::from_utf8(source).map_err(|e| {
        Error::parse(format!("byte {}", e.valid_up_to()), "log is not valid UTF-8")
    })?;

    let mut header = Header::default();
    let mut warnings = Vec::new();
    let mut tracks: Vec<AgentTrack> = Vec::new();
    let mut dropped = BTreeSet::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once(':') else {
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "scene_id" => header.scene_id = Some(value.to_string()),
                "ego_id" => header.ego_id = Some(value.to_string()),
                "weather" => header.weather = Some(value.to_string()),
                "lighting" => header.lighting = Some(value.to_string()),
                "road_layout" => header.road_layout = Some(value.to_string()),
                "collision" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    header.collision = Some(CollisionRecord {
                        colliding_agent_id: field(&parts, 0, "collision.agent_id", line_no)?
                            .to_string(),
                        impact_time: number(&parts, 1, "collision.impact_time", line_no)?,
                    });
                }
                "camera" => {
                    let parts: Vec<&str> = value.splitn(3, char::is_whitespace).collect();
                    let t = number(&parts, 0, "camera.t", line_no)?;
                    let raw = field(&parts, 1, "camera.name", line_no)?;
                    let camera = CameraName::parse(raw).ok_or_else(|| {
                        Error::parse(
                            format!("line {line_no}, field `camera.name`"),
                            format!("unknown camera {raw:?}"),
                        )
                    })?;
                    let image_path = field(&parts, 2, "camera.image_path", line_no)?.trim();
                    header.cameras.push(CameraFrame {
                        t,
                        camera,
                        image_path: image_path.to_string(),
                    });
                }
                other if options.strict => {
                    return Err(Error::parse(
                        format!("line {line_no}, field `{other}`"),
                        "unknown metadata key rejected in strict mode",
                    ))
                }
                other => warnings.push(format!("line {line_no}: ignored metadata key `{other}`")),
            }
            continue;
        }

        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 8 && parts.len() != 10 {
            return Err(Error::parse(
                format!("line {line_no}"),
                format!("expected 8 or 10 columns, found {}", parts.len()),
            ));
        }
        let t = number(&parts, 0, "t", line_no)?;
        let agent_id = parts[1];
        let Some(category) = map_type(parts[2]) else {
            dropped.insert(agent_id.to_string());
            continue;
        };
        let x = number(&parts, 3, "x", line_no)?;
        let y = number(&parts, 4, "y", line_no)?;
        let yaw = number(&parts, 5, "yaw", line_no)?;
        let vx = number(&parts, 6, "vx", line_no)?;
        let vy = number(&parts, 7, "vy", line_no)?;
        let footprint = if parts.len() == 10 {
            let fp = Footprint::new(
                number(&parts, 8, "length", line_no)?,
                number(&parts, 9, "width", line_no)?,
            );
            if fp.length <= 0.0 || fp.width <= 0.0 {
                return Err(Error::parse(
                    format!("line {line_no}, field `length`"),
                    "footprint must be positive",
                ));
            }
            fp
        } else {
            category.default_footprint()
        };

        let sample = TrackSample {
            t,
            position: Vec2::new(x, y),
            velocity: Vec2::new(vx, vy),
            heading: yaw,
        };
        match tracks.iter_mut().find(|tr| tr.agent_id == agent_id) {
            Some(track) => {
                let prev = track.samples.last().map(|s| s.t).unwrap_or(f64::NEG_INFINITY);
                if t <= prev {
                    return Err(Error::parse(
                        format!("line {line_no}, field `t`"),
                        format!("timestamp {t} of agent {agent_id:?} does not increase (previous {prev})"),
                    ));
                }
                if track.category != category {
                    return Err(Error::parse(
                        format!("line {line_no}, field `type`"),
                        format!("agent {agent_id:?} changes category"),
                    ));
                }
                track.samples.push(sample);
            }
            None => tracks.push(AgentTrack {
                agent_id: agent_id.to_string(),
                category,
                footprint,
                samples: vec![sample],
            }),
        }
    }

    for id in &dropped {
        warnings.push(format!("dropped agent {id:?} of unmapped type"));
    }

    let missing = |name: &str| Error::Structure(format!("log lacks `# {name}:` metadata"));
    let mut scenario = Scenario {
        scene_id: header.scene_id.ok_or_else(|| missing("scene_id"))?,
        ego_id: header.ego_id.ok_or_else(|| missing("ego_id"))?,
        tracks,
        camera_frames: header.cameras,
        environment: Environment {
            weather: header.weather.ok_or_else(|| missing("weather"))?,
            lighting: header.lighting.ok_or_else(|| missing("lighting"))?,
            road_layout: header.road_layout.ok_or_else(|| missing("road_layout"))?,
        },
        collision: header.collision,
    };
    scenario.normalize();
    scenario.validate()?;
    Ok(LoadedScenario {
        scenario,
        warnings,
        dropped_agents: dropped.len(),
    })
}
