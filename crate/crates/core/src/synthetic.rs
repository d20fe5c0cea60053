//! Deterministic synthetic scenes for tests, demos and the acceptance suite.
//!
//! Agents follow straight lines with optional piecewise-constant
//! longitudinal acceleration, sampled at 10 Hz. Collision records are derived
//! from the sampled tracks with the oriented-rectangle contact test, so a
//! recorded impact is always a real first contact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec2;
use crate::risk::{boxes_overlap, OrientedBox};
use crate::scenario::{
    AgentCategory, AgentTrack, CameraFrame, CameraName, CollisionRecord, Environment, Footprint,
    Scenario, TrackSample,
};

const SAMPLE_HZ: f64 = 10.0;

/// Straight-line agent description, anchored at the scene start time.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub agent_id: String,
    pub category: AgentCategory,
    pub footprint: Footprint,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Used when the agent starts at rest.
    pub heading: f64,
    /// `(from_time, accel)` pairs applied along the heading, speed clamped at zero.
    pub accel_changes: Vec<(f64, f64)>,
}

impl AgentSpec {
    pub fn new(agent_id: &str, category: AgentCategory, position: Vec2, velocity: Vec2) -> Self {
        let heading = if velocity.norm() > 0.0 {
            velocity.y.atan2(velocity.x)
        } else {
            0.0
        };
        Self {
            agent_id: agent_id.to_string(),
            category,
            footprint: category.default_footprint(),
            position,
            velocity,
            heading,
            accel_changes: Vec::new(),
        }
    }

    pub fn car(agent_id: &str, position: Vec2, velocity: Vec2) -> Self {
        Self::new(agent_id, AgentCategory::Car, position, velocity)
    }

    pub fn footprint(mut self, length: f64, width: f64) -> Self {
        self.footprint = Footprint::new(length, width);
        self
    }

    pub fn heading(mut self, heading: f64) -> Self {
        self.heading = heading;
        self
    }

    /// Apply longitudinal acceleration `accel` from absolute time `from` on.
    pub fn accel_from(mut self, from: f64, accel: f64) -> Self {
        self.accel_changes.push((from, accel));
        self.accel_changes.sort_by(|a, b| a.0.total_cmp(&b.0));
        self
    }

    /// Analytic state `elapsed` seconds after `t0`.
    fn sample(&self, t0: f64, t: f64) -> TrackSample {
        let dir = Vec2::from_heading(self.heading);
        let lateral = self.velocity - dir * self.velocity.dot(dir);
        let mut speed = self.velocity.dot(dir);
        let mut dist = 0.0;
        let mut cursor = t0;
        let mut accel = 0.0;
        let mut changes = self.accel_changes.iter().peekable();
        while cursor < t {
            let next_change = changes.peek().map(|c| c.0).filter(|&c| c <= t);
            if let Some(c) = next_change {
                if c <= cursor {
                    accel = changes.next().unwrap().1;
                    continue;
                }
            }
            let seg_end = next_change.unwrap_or(t);
            let span = seg_end - cursor;
            if accel < 0.0 && speed + accel * span < 0.0 {
                dist += speed * speed / (-2.0 * accel);
                speed = 0.0;
            } else {
                dist += speed * span + 0.5 * accel * span * span;
                speed += accel * span;
            }
            cursor = seg_end;
        }
        let elapsed = t - t0;
        TrackSample {
            t,
            position: self.position + dir * dist + lateral * elapsed,
            velocity: dir * speed + lateral,
            heading: self.heading,
        }
    }
}

pub struct SceneBuilder {
    scene_id: String,
    start: f64,
    end: f64,
    ego: Option<AgentSpec>,
    neighbors: Vec<AgentSpec>,
    environment: Environment,
    cameras: bool,
    detect_collision: bool,
}

impl SceneBuilder {
    pub fn new(scene_id: &str, start: f64, end: f64) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            start,
            end,
            ego: None,
            neighbors: Vec::new(),
            environment: Environment {
                weather: "clear".into(),
                lighting: "daytime".into(),
                road_layout: "four-way intersection".into(),
            },
            cameras: false,
            detect_collision: false,
        }
    }

    pub fn ego(mut self, spec: AgentSpec) -> Self {
        self.ego = Some(spec);
        self
    }

    pub fn neighbor(mut self, spec: AgentSpec) -> Self {
        self.neighbors.push(spec);
        self
    }

    pub fn environment(mut self, weather: &str, lighting: &str, road_layout: &str) -> Self {
        self.environment = Environment {
            weather: weather.into(),
            lighting: lighting.into(),
            road_layout: road_layout.into(),
        };
        self
    }

    /// Add 2 Hz frame references for the three forward cameras.
    pub fn with_cameras(mut self) -> Self {
        self.cameras = true;
        self
    }

    /// Record the first ego contact (if any) as the scene's collision.
    pub fn detect_collision(mut self) -> Self {
        self.detect_collision = true;
        self
    }

    fn times(&self) -> Vec<f64> {
        let n = ((self.end - self.start) * SAMPLE_HZ).round() as usize;
        (0..=n).map(|k| self.start + k as f64 / SAMPLE_HZ).collect()
    }

    pub fn build(self) -> Scenario {
        let ego = self.ego.clone().expect("scene needs an ego");
        let times = self.times();
        let to_track = |spec: &AgentSpec| AgentTrack {
            agent_id: spec.agent_id.clone(),
            category: spec.category,
            footprint: spec.footprint,
            samples: times.iter().map(|&t| spec.sample(self.start, t)).collect(),
        };
        let mut tracks = vec![to_track(&ego)];
        tracks.extend(self.neighbors.iter().map(to_track));

        let collision = if self.detect_collision {
            first_contact(&tracks[0], &tracks[1..])
        } else {
            None
        };

        let mut camera_frames = Vec::new();
        if self.cameras {
            let n = ((self.end - self.start) * 2.0).floor() as usize;
            for k in 0..=n {
                let t = self.start + k as f64 / 2.0;
                for camera in [CameraName::Front, CameraName::FrontLeft, CameraName::FrontRight] {
                    camera_frames.push(CameraFrame {
                        t,
                        camera,
                        image_path: format!("{}/{}/{k:04}.jpg", self.scene_id, camera.as_str()),
                    });
                }
            }
        }

        Scenario {
            scene_id: self.scene_id,
            ego_id: ego.agent_id,
            tracks,
            camera_frames,
            environment: self.environment,
            collision,
        }
    }
}

fn first_contact(ego: &AgentTrack, others: &[AgentTrack]) -> Option<CollisionRecord> {
    for (i, e) in ego.samples.iter().enumerate() {
        let ego_box = OrientedBox::new(e.position, e.heading, ego.footprint);
        for other in others {
            let o = &other.samples[i];
            if boxes_overlap(&ego_box, &OrientedBox::new(o.position, o.heading, other.footprint)) {
                return Some(CollisionRecord {
                    colliding_agent_id: other.agent_id.clone(),
                    impact_time: e.t,
                });
            }
        }
    }
    None
}

/// Ego at the origin at `t` driving +x at 10 m/s toward a stopped lead 50 m
/// ahead; both 4 m × 2 m. The scene spans `[t - 2, t + 4]`.
pub fn lead_vehicle(scene_id: &str, t: f64) -> Scenario {
    let start = t - 2.0;
    SceneBuilder::new(scene_id, start, t + 4.0)
        .ego(AgentSpec::car("ego", Vec2::new(-20.0, 0.0), Vec2::new(10.0, 0.0)).footprint(4.0, 2.0))
        .neighbor(AgentSpec::car("lead", Vec2::new(50.0, 0.0), Vec2::ZERO).footprint(4.0, 2.0))
        .with_cameras()
        .build()
}

/// Like [`lead_vehicle`] but the logged ego accelerates at 5 m/s² from `t`
/// and rear-ends the lead, so `t` falls inside the pre-impact window.
pub fn lead_vehicle_collision(scene_id: &str, t: f64) -> Scenario {
    let start = t - 2.0;
    SceneBuilder::new(scene_id, start, t + 4.0)
        .ego(
            AgentSpec::car("ego", Vec2::new(-20.0, 0.0), Vec2::new(10.0, 0.0))
                .footprint(4.0, 2.0)
                .accel_from(t, 5.0),
        )
        .neighbor(AgentSpec::car("lead", Vec2::new(50.0, 0.0), Vec2::ZERO).footprint(4.0, 2.0))
        .with_cameras()
        .detect_collision()
        .build()
}

/// Two 4 m × 2 m cars closing head-on at 20 m/s with the given disc TTC at `t`.
pub fn head_on(scene_id: &str, t: f64, ttc: f64) -> Scenario {
    let r_sum = 20f64.sqrt();
    let gap = r_sum + 20.0 * ttc;
    let start = t - 2.0;
    SceneBuilder::new(scene_id, start, t + 1.0)
        .ego(AgentSpec::car("ego", Vec2::new(-20.0, 0.0), Vec2::new(10.0, 0.0)).footprint(4.0, 2.0))
        .neighbor(
            AgentSpec::car("oncoming", Vec2::new(gap + 20.0, 0.0), Vec2::new(-10.0, 0.0))
                .footprint(4.0, 2.0),
        )
        .build()
}

/// Ego alone at constant speed for 10 s.
pub fn constant_speed(scene_id: &str, speed: f64) -> Scenario {
    SceneBuilder::new(scene_id, 0.0, 10.0)
        .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::new(speed, 0.0)))
        .with_cameras()
        .build()
}

const WEATHER: [&str; 4] = ["clear", "rain", "fog", "overcast"];
const LIGHTING: [&str; 3] = ["daytime", "dusk", "night"];
const LAYOUT: [&str; 3] = ["four-way intersection", "t-junction", "straight road"];

/// A varied normal (collision-free) scene; the variant cycles with `index`.
pub fn normal_scene(scene_id: &str, index: usize, rng: &mut impl Rng) -> Scenario {
    let v = rng.gen_range(6.0..14.0);
    let mut b = SceneBuilder::new(scene_id, 0.0, 10.0)
        .environment(
            WEATHER[rng.gen_range(0..WEATHER.len())],
            LIGHTING[rng.gen_range(0..LIGHTING.len())],
            LAYOUT[rng.gen_range(0..LAYOUT.len())],
        )
        .with_cameras()
        .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::new(v, 0.0)));
    b = match index % 5 {
        // Lead at matched speed.
        0 => b.neighbor(AgentSpec::car(
            "lead",
            Vec2::new(rng.gen_range(20.0..30.0), 0.0),
            Vec2::new(v, 0.0),
        )),
        // Oncoming traffic in the opposite lane.
        1 => b.neighbor(AgentSpec::car(
            "oncoming",
            Vec2::new(rng.gen_range(120.0..200.0), 7.0),
            Vec2::new(-rng.gen_range(8.0..12.0), 0.0),
        )),
        // Pedestrian waiting on the kerb.
        2 => b.neighbor(
            AgentSpec::new(
                "ped",
                AgentCategory::Pedestrian,
                Vec2::new(rng.gen_range(30.0..60.0), 8.0),
                Vec2::ZERO,
            )
            .heading(-std::f64::consts::FRAC_PI_2),
        ),
        // Parallel truck in the adjacent lane, same speed.
        3 => b.neighbor(
            AgentSpec::new(
                "truck",
                AgentCategory::Truck,
                Vec2::new(rng.gen_range(-5.0..5.0), -7.5),
                Vec2::new(v, 0.0),
            ),
        ),
        // Cross traffic that clears the intersection long before the ego.
        _ => b.neighbor(AgentSpec::car(
            "cross",
            Vec2::new(10.0 * v, -20.0),
            Vec2::new(0.0, 12.0),
        )),
    };
    b.build()
}

/// A scene whose log contains an ego collision; the variant cycles with `index`.
pub fn collision_scene(scene_id: &str, index: usize, rng: &mut impl Rng) -> Scenario {
    let v = rng.gen_range(8.0..12.0);
    let impact = rng.gen_range(7.0..9.0);
    let b = SceneBuilder::new(scene_id, 0.0, 10.0)
        .environment(
            WEATHER[rng.gen_range(0..WEATHER.len())],
            LIGHTING[rng.gen_range(0..LIGHTING.len())],
            "four-way intersection",
        )
        .with_cameras()
        .detect_collision()
        .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::new(v, 0.0)));
    let meet = Vec2::new(v * impact, 0.0);
    let b = match index % 3 {
        // Perpendicular crossing from the right.
        0 => {
            let u = rng.gen_range(8.0..12.0);
            b.neighbor(AgentSpec::car(
                "crosser",
                meet - Vec2::new(0.0, u * impact),
                Vec2::new(0.0, u),
            ))
        }
        // Stopped vehicle in the ego lane.
        1 => b.neighbor(AgentSpec::car("stalled", meet, Vec2::ZERO)),
        // Oblique approach from the left.
        _ => {
            let u = rng.gen_range(8.0..12.0);
            let dir = Vec2::from_heading(-std::f64::consts::FRAC_PI_4 * 1.5);
            b.neighbor(AgentSpec::car("merger", meet - dir * (u * impact), dir * u))
        }
    };
    b.build()
}

/// `total` scenes of which the first `collisions` contain a recorded crash.
pub fn suite(total: usize, collisions: usize, seed: u64) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..total)
        .map(|i| {
            if i < collisions {
                collision_scene(&format!("scene_{i:03}"), i, &mut rng)
            } else {
                normal_scene(&format!("scene_{i:03}"), i - collisions, &mut rng)
            }
        })
        .collect()
}
