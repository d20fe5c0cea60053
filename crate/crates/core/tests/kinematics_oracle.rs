//! Closed-form rollouts against a fine explicit integrator.

use cfplan_core::geometry::Vec2;
use cfplan_core::kinematics::{enumerate_meta_actions, rollout, to_accel_profile, Behavior};
use cfplan_core::scenario::{AgentCategory, AgentState, Footprint};
use cfplan_core::PlannerConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FINE_DT: f64 = 1e-4;

fn ego(speed: f64, heading: f64) -> AgentState {
    AgentState {
        agent_id: "ego".into(),
        category: AgentCategory::Car,
        footprint: Footprint::new(4.5, 2.0),
        position: Vec2::new(3.0, -1.0),
        velocity: Vec2::from_heading(heading) * speed,
        heading,
    }
}

/// Integrate `(distance, speed)` at `FINE_DT`, recording every 0.1 s.
///
/// Each step uses the exact constant-acceleration update, with the speed
/// clamped at zero and the acceleration chosen by the segment the step
/// starts in.
fn integrate(v0: f64, a_short: f64, a_long: f64) -> Vec<(f64, f64)> {
    let steps_per_sample = 1000;
    let mut out = vec![(0.0, v0)];
    let (mut d, mut v) = (0.0, v0);
    for i in 0..30_000 {
        let a = if i < 10_000 { a_short } else { a_long };
        let mut dt = FINE_DT;
        if a < 0.0 && v + a * dt < 0.0 {
            dt = v / -a;
        }
        d += v * dt + 0.5 * a * dt * dt;
        v = (v + a * dt).max(0.0);
        if (i + 1) % steps_per_sample == 0 {
            out.push((d, v));
        }
    }
    out
}

#[test]
fn thousand_random_rollouts_match_integrator() {
    let cfg = PlannerConfig::default();
    let actions = enumerate_meta_actions();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let v0 = rng.gen_range(0.0..25.0);
        let heading = rng.gen_range(-3.1..3.1);
        let action = actions[rng.gen_range(0..actions.len())];
        let e = ego(v0, heading);
        let roll = rollout(&e, action, &to_accel_profile(action, &cfg), &cfg);
        let reference = integrate(v0, action.short.sign() * 2.0, action.long.sign() * 2.0);
        assert_eq!(roll.samples.len(), reference.len());
        for (s, (d, v)) in roll.samples.iter().zip(&reference) {
            let expected = e.position + Vec2::from_heading(heading) * *d;
            assert!(s.position.distance(expected) < 1e-3, "{action} v0={v0} off={}", s.offset);
            assert!((s.speed - v).abs() < 1e-4, "{action} v0={v0} off={}", s.offset);
        }
    }
}

#[test]
fn profile_grid_is_exact() {
    let cfg = PlannerConfig::default();
    for a in enumerate_meta_actions() {
        let p = to_accel_profile(a, &cfg);
        for (b, accel) in [(a.short, p.short_accel), (a.long, p.long_accel)] {
            let expected = match b {
                Behavior::Accelerate => 2.0,
                Behavior::Maintain => 0.0,
                Behavior::Decelerate => -2.0,
            };
            assert_eq!(accel, expected);
        }
        assert_eq!(p.accel_at(0.0), p.short_accel);
        assert_eq!(p.accel_at(0.999), p.short_accel);
        assert_eq!(p.accel_at(1.0), p.long_accel);
        assert_eq!(p.accel_at(3.0), p.long_accel);
    }
}

proptest! {
    #[test]
    fn speed_never_negative_and_distance_monotone(v0 in 0.0f64..30.0, heading in -std::f64::consts::PI..std::f64::consts::PI, idx in 0usize..9) {
        let cfg = PlannerConfig::default();
        let action = enumerate_meta_actions()[idx];
        let roll = rollout(&ego(v0, heading), action, &to_accel_profile(action, &cfg), &cfg);
        for w in roll.samples.windows(2) {
            prop_assert!(w[1].speed >= 0.0);
            prop_assert!(w[1].distance >= w[0].distance - 1e-12);
            prop_assert_eq!(w[1].heading, heading);
        }
        // Once stopped, the ego stays put.
        if let Some(k) = roll.samples.iter().position(|s| s.speed == 0.0 && s.offset > 0.0) {
            let still = roll.samples[k].position;
            for s in &roll.samples[k..] {
                if action.long != Behavior::Accelerate || s.offset <= 1.0 {
                    prop_assert!(s.position.distance(still) < 1e-9 || s.speed > 0.0);
                }
            }
        }
    }
}
