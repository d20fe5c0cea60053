use super::{AgentState, AgentTrack, CameraFrame, Scenario, TrackSample};
use crate::config::{PlannerConfig, MAX_INTERPOLATION_GAP, TIME_EPS};
use crate::error::{Error, Result};

/// Everything observable at analysis time `t`: ego and neighbor histories
/// over `[t - history_window, t]` plus the camera frames in that interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub scene_id: String,
    pub t: f64,
    pub ego_history: AgentTrack,
    pub neighbor_histories: Vec<AgentTrack>,
    pub camera_refs: Vec<CameraFrame>,
}

impl ObservationWindow {
    /// Ego state at the analysis time (the last history sample).
    pub fn ego_state(&self) -> AgentState {
        let last = self
            .ego_history
            .samples
            .last()
            .expect("ego history always holds the sample at t");
        self.ego_history.snapshot(last)
    }

    pub fn neighbor(&self, agent_id: &str) -> Option<&AgentTrack> {
        self.neighbor_histories.iter().find(|n| n.agent_id == agent_id)
    }

    /// Each neighbor's state at `t`, extrapolated at constant velocity from
    /// its latest sample when the log stops before `t`. The second element is
    /// the staleness in seconds (zero when a sample at `t` exists).
    pub fn neighbor_states(&self) -> Vec<(AgentState, f64)> {
        self.neighbor_histories
            .iter()
            .filter_map(|track| current_state(track, self.t))
            .collect()
    }
}

pub(crate) fn current_state(track: &AgentTrack, t: f64) -> Option<(AgentState, f64)> {
    if let Some(state) = track.state_at(t, MAX_INTERPOLATION_GAP) {
        return Some((state, 0.0));
    }
    let last = track.latest_at_or_before(t)?;
    let staleness = t - last.t;
    let mut state = track.snapshot(last);
    state.position = state.position + state.velocity * staleness;
    Some((state, staleness))
}

/// Slice the scenario at analysis time `t`.
///
/// Histories are resampled onto the `rollout_dt` grid ending exactly at `t`;
/// gaps up to 0.3 s are bridged by interpolation. Neighbors are kept when
/// their distance to the ego at `t` is at most `neighbor_radius`.
pub fn extract_window(s: &Scenario, t: f64, cfg: &PlannerConfig) -> Result<ObservationWindow> {
    let (start, end) = s.ego_span();
    if !t.is_finite() || t < start - TIME_EPS || t > end + TIME_EPS {
        return Err(Error::Range { t, start, end });
    }
    let window_start = t - cfg.history_window;
    if window_start < start - TIME_EPS {
        return Err(Error::Range {
            t: window_start,
            start,
            end,
        });
    }

    let ego = s.ego();
    let steps = cfg.history_steps();
    let grid: Vec<f64> = (0..=steps)
        .map(|k| t - (steps - k) as f64 * cfg.rollout_dt)
        .collect();

    let ego_now = ego
        .sample_at(t, MAX_INTERPOLATION_GAP)
        .ok_or_else(|| Error::InsufficientHistory {
            agent_id: ego.agent_id.clone(),
            t,
            detail: format!("no ego sample within {MAX_INTERPOLATION_GAP} s gap at t"),
        })?;
    let mut ego_samples = Vec::with_capacity(grid.len());
    for &g in &grid[..steps] {
        let sample = ego
            .sample_at(g, MAX_INTERPOLATION_GAP)
            .ok_or_else(|| Error::InsufficientHistory {
                agent_id: ego.agent_id.clone(),
                t,
                detail: format!("ego history has a gap at {g:.3} s"),
            })?;
        ego_samples.push(sample);
    }
    ego_samples.push(ego_now);
    let ego_history = AgentTrack {
        samples: ego_samples,
        ..ego.clone()
    };
    let ego_pos = ego_history.samples.last().map(|s| s.position).unwrap_or_default();

    let mut neighbor_histories = Vec::new();
    for track in s.neighbors() {
        let Some((state, staleness)) = current_state(track, t) else {
            continue;
        };
        if staleness > cfg.history_window + TIME_EPS {
            continue;
        }
        if state.position.distance(ego_pos) > cfg.neighbor_radius {
            continue;
        }
        let mut samples: Vec<TrackSample> = grid
            .iter()
            .filter_map(|&g| track.sample_at(g, MAX_INTERPOLATION_GAP))
            .collect();
        if staleness > 0.0 {
            // Keep the raw last sample so extrapolation anchors on it.
            if let Some(last) = track.latest_at_or_before(t) {
                if !samples.iter().any(|s| (s.t - last.t).abs() <= TIME_EPS) {
                    samples.push(last.clone());
                    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
                }
            }
        }
        if samples.is_empty() {
            continue;
        }
        neighbor_histories.push(AgentTrack {
            samples,
            ..track.clone()
        });
    }

    let camera_refs = s
        .camera_frames
        .iter()
        .filter(|f| f.t >= window_start - TIME_EPS && f.t <= t + TIME_EPS)
        .cloned()
        .collect();

    Ok(ObservationWindow {
        scene_id: s.scene_id.clone(),
        t,
        ego_history,
        neighbor_histories,
        camera_refs,
    })
}

/// Window used by ground-truth assessment: identical to [`extract_window`]
/// but keeping every neighbor within `assessment_radius`.
pub fn extract_assessment_window(
    s: &Scenario,
    t: f64,
    cfg: &PlannerConfig,
) -> Result<ObservationWindow> {
    extract_window(s, t, &cfg.for_assessment())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::synthetic::{self, AgentSpec};

    fn scene_with_neighbor_at(distance: f64) -> Scenario {
        synthetic::SceneBuilder::new("w", 0.0, 5.0)
            .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::new(0.0, 0.0)))
            .neighbor(AgentSpec::car("n", Vec2::new(0.0, distance), Vec2::ZERO))
            .build()
    }

    #[test]
    fn radius_boundary() {
        let cfg = PlannerConfig::default();
        let inside = extract_window(&scene_with_neighbor_at(29.9), 2.0, &cfg).unwrap();
        assert_eq!(inside.neighbor_histories.len(), 1);
        let outside = extract_window(&scene_with_neighbor_at(30.1), 2.0, &cfg).unwrap();
        assert!(outside.neighbor_histories.is_empty());
    }

    #[test]
    fn window_has_sixteen_ego_samples() {
        let cfg = PlannerConfig::default();
        let w = extract_window(&scene_with_neighbor_at(10.0), 3.0, &cfg).unwrap();
        assert_eq!(w.ego_history.samples.len(), 16);
        assert!((w.ego_history.samples[0].t - 1.5).abs() < 1e-9);
        assert_eq!(w.ego_history.samples[15].t, 3.0);
        assert_eq!(w.neighbor_histories[0].samples.len(), 16);
    }

    #[test]
    fn range_errors() {
        let cfg = PlannerConfig::default();
        let s = scene_with_neighbor_at(10.0);
        assert!(matches!(extract_window(&s, 7.0, &cfg), Err(Error::Range { .. })));
        assert!(matches!(extract_window(&s, 1.0, &cfg), Err(Error::Range { .. })));
    }

    #[test]
    fn ego_gap_is_insufficient_history() {
        let cfg = PlannerConfig::default();
        let mut s = scene_with_neighbor_at(10.0);
        let ego = s.tracks.iter_mut().find(|t| t.agent_id == "ego").unwrap();
        // Remove samples in (2.6, 3.1): a 0.5 s hole around t = 3.0.
        ego.samples.retain(|x| x.t < 2.6 - 1e-9 || x.t > 3.1 - 1e-9);
        let err = extract_window(&s, 3.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory { .. }), "{err}");
    }

    #[test]
    fn dropped_frames_are_interpolated() {
        let cfg = PlannerConfig::default();
        let mut s = synthetic::SceneBuilder::new("w", 0.0, 5.0)
            .ego(AgentSpec::car("ego", Vec2::new(3.0, -2.0), Vec2::new(7.0, 1.5)))
            .build();
        let ego = s.tracks.iter_mut().find(|t| t.agent_id == "ego").unwrap();
        ego.samples.retain(|x| ((x.t * 10.0).round() as i64) % 3 != 1);
        let w = extract_window(&s, 3.0, &cfg).unwrap();
        for sample in &w.ego_history.samples {
            let exact = Vec2::new(3.0, -2.0) + Vec2::new(7.0, 1.5) * sample.t;
            assert!((sample.position - exact).norm() < 1e-9);
        }
    }

    #[test]
    fn stale_neighbor_is_kept_with_raw_anchor() {
        let cfg = PlannerConfig::default();
        let mut s = scene_with_neighbor_at(10.0);
        let n = s.tracks.iter_mut().find(|t| t.agent_id == "n").unwrap();
        n.samples.retain(|x| x.t <= 2.8 + 1e-9);
        let w = extract_window(&s, 3.0, &cfg).unwrap();
        let states = w.neighbor_states();
        assert_eq!(states.len(), 1);
        assert!((states[0].1 - 0.2).abs() < 1e-9);
    }
}
