//! Oriented-rectangle contact via the separating-axis test.

use crate::config::{PlannerConfig, MAX_INTERPOLATION_GAP, TIME_EPS};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{EgoRollout, PredictedTrack};
use crate::scenario::{AgentTrack, Footprint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub footprint: Footprint,
}

impl OrientedBox {
    pub fn new(center: Vec2, heading: f64, footprint: Footprint) -> Self {
        Self {
            center,
            heading,
            footprint,
        }
    }

    fn axes(&self) -> [Vec2; 2] {
        let forward = Vec2::from_heading(self.heading);
        [forward, Vec2::new(-forward.y, forward.x)]
    }

    /// Half-extent of the box projected onto unit `axis`.
    fn radius_along(&self, axis: Vec2) -> f64 {
        let [forward, left] = self.axes();
        0.5 * self.footprint.length * forward.dot(axis).abs()
            + 0.5 * self.footprint.width * left.dot(axis).abs()
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [forward, left] = self.axes();
        let f = forward * (0.5 * self.footprint.length);
        let l = left * (0.5 * self.footprint.width);
        [
            self.center + f + l,
            self.center + f - l,
            self.center - f - l,
            self.center - f + l,
        ]
    }
}

/// True when the rectangles touch or intersect.
pub fn boxes_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    let delta = b.center - a.center;
    a.axes()
        .into_iter()
        .chain(b.axes())
        .all(|axis| delta.dot(axis).abs() <= a.radius_along(axis) + b.radius_along(axis))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub offset: f64,
    pub position: Vec2,
    pub heading: f64,
}

/// A footprint moving through time-stamped poses.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedTrajectory {
    pub footprint: Footprint,
    pub poses: Vec<Pose>,
}

impl OrientedTrajectory {
    pub fn from_rollout(rollout: &EgoRollout, footprint: Footprint) -> Self {
        Self {
            footprint,
            poses: rollout
                .samples
                .iter()
                .map(|s| Pose {
                    offset: s.offset,
                    position: s.position,
                    heading: s.heading,
                })
                .collect(),
        }
    }

    /// Logged motion of `track` over `[t, t + plan_horizon]` on the rollout
    /// grid. Only the first contiguous run of available offsets is kept, so
    /// agents entering late or leaving early yield shorter trajectories.
    pub fn from_recorded(track: &AgentTrack, t: f64, cfg: &PlannerConfig) -> Self {
        let mut poses = Vec::new();
        for k in 0..=cfg.horizon_steps() {
            let offset = cfg.offset(k);
            match track.sample_at(t + offset, MAX_INTERPOLATION_GAP) {
                Some(s) => poses.push(Pose {
                    offset,
                    position: s.position,
                    heading: s.heading,
                }),
                None if poses.is_empty() => continue,
                None => break,
            }
        }
        Self {
            footprint: track.footprint,
            poses,
        }
    }

    pub fn from_prediction(track: &PredictedTrack) -> Self {
        Self {
            footprint: track.footprint,
            poses: track
                .samples
                .iter()
                .map(|s| Pose {
                    offset: s.offset,
                    position: s.position,
                    heading: s.heading,
                })
                .collect(),
        }
    }
}

/// Earliest shared offset at which the two footprints overlap.
///
/// Offsets are matched within 1 µs. Inside the overlapping time range every
/// offset of either trajectory must have a partner, otherwise the grids are
/// misaligned and an error is returned.
pub fn trajectories_collide(
    a: &OrientedTrajectory,
    b: &OrientedTrajectory,
) -> Result<Option<f64>> {
    let (Some(a0), Some(b0)) = (a.poses.first(), b.poses.first()) else {
        return Ok(None);
    };
    let lo = a0.offset.max(b0.offset) - TIME_EPS;
    let hi = a.poses.last().unwrap().offset.min(b.poses.last().unwrap().offset) + TIME_EPS;
    let pa: Vec<&Pose> = a.poses.iter().filter(|p| p.offset >= lo && p.offset <= hi).collect();
    let pb: Vec<&Pose> = b.poses.iter().filter(|p| p.offset >= lo && p.offset <= hi).collect();
    if pa.len() != pb.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples in the shared range",
            pa.len(),
            pb.len()
        )));
    }
    for (x, y) in pa.into_iter().zip(pb) {
        if (x.offset - y.offset).abs() > TIME_EPS {
            return Err(Error::GridMismatch(format!(
                "offset {} has no partner (nearest {})",
                x.offset, y.offset
            )));
        }
        let bx = OrientedBox::new(x.position, x.heading, a.footprint);
        let by = OrientedBox::new(y.position, y.heading, b.footprint);
        if boxes_overlap(&bx, &by) {
            return Ok(Some(x.offset));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::f64::consts::FRAC_PI_2;

    fn traj(fp: Footprint, heading: f64, pos: impl Fn(f64) -> Vec2) -> OrientedTrajectory {
        OrientedTrajectory {
            footprint: fp,
            poses: (0..=30)
                .map(|k| {
                    let offset = k as f64 * 0.1;
                    Pose {
                        offset,
                        position: pos(offset),
                        heading,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn identical_stationary_poses_touch_at_zero() {
        let fp = Footprint::new(4.5, 2.0);
        let a = traj(fp, 0.3, |_| Vec2::new(1.0, 2.0));
        assert_eq!(trajectories_collide(&a, &a.clone()).unwrap(), Some(0.0));
    }

    #[test]
    fn parallel_lanes_four_meters_apart() {
        let fp = Footprint::new(4.5, 2.0);
        let a = traj(fp, 0.0, |o| Vec2::new(10.0 * o, 0.0));
        let b = traj(fp, 0.0, |o| Vec2::new(12.0 * o, 4.0));
        assert_eq!(trajectories_collide(&a, &b).unwrap(), None);
    }

    /// Dense oracle: point-in-polygon and edge-crossing tests on the corners.
    fn polygons_intersect(a: &OrientedBox, b: &OrientedBox) -> bool {
        fn inside(p: Vec2, poly: &[Vec2; 4]) -> bool {
            let mut sign = 0.0;
            for i in 0..4 {
                let e = poly[(i + 1) % 4] - poly[i];
                let cross = e.x * (p.y - poly[i].y) - e.y * (p.x - poly[i].x);
                if cross.abs() < 1e-12 {
                    continue;
                }
                if sign == 0.0 {
                    sign = cross.signum();
                } else if cross.signum() != sign {
                    return false;
                }
            }
            true
        }
        fn segs(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
            let d = |a: Vec2, b: Vec2, c: Vec2| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            let d1 = d(q1, q2, p1);
            let d2 = d(q1, q2, p2);
            let d3 = d(p1, p2, q1);
            let d4 = d(p1, p2, q2);
            d1 * d2 <= 0.0 && d3 * d4 <= 0.0
        }
        let ca = a.corners();
        let cb = b.corners();
        if ca.iter().any(|&p| inside(p, &cb)) || cb.iter().any(|&p| inside(p, &ca)) {
            return true;
        }
        (0..4).any(|i| (0..4).any(|j| segs(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])))
    }

    #[test]
    fn crossing_paths_meet_at_20_20() {
        let fp = Footprint::new(4.5, 2.0);
        // Ego heads +x and reaches (20, 20) at offset 2.0; the other heads +y.
        let a = traj(fp, 0.0, |o| Vec2::new(10.0 * o, 20.0));
        let b = traj(fp, FRAC_PI_2, |o| Vec2::new(20.0, 10.0 * o));
        let hit = trajectories_collide(&a, &b).unwrap().expect("paths cross");
        // Oracle: first grid offset where the dense polygon test reports overlap.
        let oracle = a
            .poses
            .iter()
            .zip(&b.poses)
            .find(|(x, y)| {
                polygons_intersect(
                    &OrientedBox::new(x.position, x.heading, fp),
                    &OrientedBox::new(y.position, y.heading, fp),
                )
            })
            .map(|(x, _)| x.offset)
            .unwrap();
        assert_eq!(hit, oracle);
        assert!(hit <= 2.0 + 1e-9);
    }

    #[test]
    fn misaligned_grids_are_rejected() {
        let fp = Footprint::new(4.5, 2.0);
        let a = traj(fp, 0.0, |_| Vec2::ZERO);
        let mut b = a.clone();
        for p in &mut b.poses {
            p.offset += 0.05;
        }
        b.poses.pop();
        assert!(matches!(trajectories_collide(&a, &b), Err(Error::GridMismatch(_))));
    }

    proptest::proptest! {
        #[test]
        fn sat_agrees_with_polygon_oracle(
            ax in -6.0..6.0f64, ay in -6.0..6.0f64, ah in -PI..PI,
            bh in -PI..PI, al in 0.5..6.0f64, aw in 0.5..3.0f64,
            bl in 0.5..6.0f64, bw in 0.5..3.0f64,
        ) {
            let a = OrientedBox::new(Vec2::new(ax, ay), ah, Footprint::new(al, aw));
            let b = OrientedBox::new(Vec2::ZERO, bh, Footprint::new(bl, bw));
            proptest::prop_assert_eq!(boxes_overlap(&a, &b), polygons_intersect(&a, &b));
        }

        #[test]
        fn rectangle_contact_implies_disc_contact(
            ax in -8.0..8.0f64, ay in -8.0..8.0f64, ah in -PI..PI, bh in -PI..PI,
        ) {
            let fa = Footprint::new(4.5, 2.0);
            let fb = Footprint::new(2.2, 0.8);
            let a = OrientedBox::new(Vec2::new(ax, ay), ah, fa);
            let b = OrientedBox::new(Vec2::ZERO, bh, fb);
            if boxes_overlap(&a, &b) {
                proptest::prop_assert!(a.center.norm() <= fa.circumradius() + fb.circumradius());
            }
        }
    }
}
