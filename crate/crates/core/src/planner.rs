//! Meta-action evaluation tree.
//!
//! Every root-to-leaf path is rolled out, scored by its minimum TTC against
//! predicted neighbors and its physical contact, and the best branch becomes
//! the planned trajectory. Selection is lexicographic: contact-free Safe
//! branches first, maximizing progress; when nothing is Safe, the branch
//! with the largest minimum TTC (contact-free before contact).

use serde::{Deserialize, Serialize};

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::kinematics::{
    enumerate_meta_actions, predict_neighbors, rollout, to_accel_profile, EgoRollout, MetaAction,
    PredictedTrack,
};
use crate::risk::{rollout_min_ttc, trajectories_collide, OrientedTrajectory, RiskClass};
use crate::scenario::{AgentState, ObservationWindow};

/// Simulated result of executing one meta-action.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualOutcome {
    pub action: MetaAction,
    pub rollout: EgoRollout,
    pub min_ttc: f64,
    pub min_ttc_agent: Option<String>,
    pub min_ttc_offset: Option<f64>,
    /// First offset at which the ego rectangle overlaps a predicted neighbor.
    pub contact: Option<f64>,
    pub label: RiskClass,
    pub progress: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionReason {
    MaxProgressAmongSafe,
    MaxMinTtcAllUnsafe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub outcomes: Vec<CounterfactualOutcome>,
    pub selected: MetaAction,
    pub planned_trajectory: EgoRollout,
    pub selection_reason: SelectionReason,
    pub predictions: Vec<PredictedTrack>,
}

impl PlanResult {
    pub fn selected_outcome(&self) -> &CounterfactualOutcome {
        self.outcomes
            .iter()
            .find(|o| o.action == self.selected)
            .expect("selected action is one of the outcomes")
    }
}

/// Outcome of one branch given an already-computed neighbor prediction.
pub fn evaluate_action(
    ego: &AgentState,
    action: MetaAction,
    predictions: &[PredictedTrack],
    cfg: &PlannerConfig,
) -> Result<CounterfactualOutcome> {
    let roll = rollout(ego, action, &to_accel_profile(action, cfg), cfg);
    let ttc = rollout_min_ttc(ego, &roll, predictions)?;
    let ego_traj = OrientedTrajectory::from_rollout(&roll, ego.footprint);
    let mut contact: Option<f64> = None;
    for p in predictions {
        if let Some(hit) = trajectories_collide(&ego_traj, &OrientedTrajectory::from_prediction(p))? {
            contact = Some(contact.map_or(hit, |c| c.min(hit)));
        }
    }
    let label = if contact.is_some() || ttc.min_ttc < cfg.ttc_threshold {
        RiskClass::Unsafe
    } else {
        RiskClass::Safe
    };
    Ok(CounterfactualOutcome {
        action,
        progress: roll.progress(),
        rollout: roll,
        min_ttc: ttc.min_ttc,
        min_ttc_agent: ttc.agent_id,
        min_ttc_offset: ttc.offset,
        contact,
        label,
    })
}

/// Evaluate all nine branches in canonical order.
pub fn evaluate_tree(
    window: &ObservationWindow,
    cfg: &PlannerConfig,
) -> Result<(Vec<CounterfactualOutcome>, Vec<PredictedTrack>)> {
    let ego = window.ego_state();
    let predictions = predict_neighbors(window, cfg);
    let outcomes = enumerate_meta_actions()
        .into_iter()
        .map(|a| evaluate_action(&ego, a, &predictions, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok((outcomes, predictions))
}

/// Pick the optimal branch from exactly nine outcomes in canonical order.
pub fn select_action(outcomes: &[CounterfactualOutcome]) -> Result<(MetaAction, SelectionReason)> {
    if outcomes.len() != 9 {
        return Err(Error::Structure(format!(
            "expected 9 outcomes, got {}",
            outcomes.len()
        )));
    }
    let mut best: Option<&CounterfactualOutcome> = None;
    let safe = outcomes.iter().any(|o| o.label == RiskClass::Safe);
    if safe {
        for o in outcomes.iter().filter(|o| o.label == RiskClass::Safe) {
            if best.is_none_or(|b| o.progress > b.progress) {
                best = Some(o);
            }
        }
        return Ok((best.unwrap().action, SelectionReason::MaxProgressAmongSafe));
    }
    let rank = |o: &CounterfactualOutcome| (o.contact.is_none(), o.min_ttc);
    for o in outcomes {
        let better = match best {
            None => true,
            Some(b) => {
                let (free_o, ttc_o) = rank(o);
                let (free_b, ttc_b) = rank(b);
                (free_o && !free_b) || (free_o == free_b && ttc_o > ttc_b)
            }
        };
        if better {
            best = Some(o);
        }
    }
    Ok((best.unwrap().action, SelectionReason::MaxMinTtcAllUnsafe))
}

/// Evaluate the tree and return the selected branch's rollout as the plan.
pub fn plan(window: &ObservationWindow, cfg: &PlannerConfig) -> Result<PlanResult> {
    let (outcomes, predictions) = evaluate_tree(window, cfg)?;
    let (selected, selection_reason) = select_action(&outcomes)?;
    let planned_trajectory = outcomes
        .iter()
        .find(|o| o.action == selected)
        .map(|o| o.rollout.clone())
        .expect("selected action is present");
    Ok(PlanResult {
        outcomes,
        selected,
        planned_trajectory,
        selection_reason,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::kinematics::Behavior::*;
    use crate::scenario::extract_assessment_window as extract_window;
    use crate::synthetic::{self, AgentSpec, SceneBuilder};

    fn cfg() -> PlannerConfig {
        PlannerConfig::default()
    }

    #[test]
    fn empty_scene_all_safe_and_accelerates() {
        let s = synthetic::constant_speed("c", 10.0);
        let w = extract_window(&s, 2.0, &cfg()).unwrap();
        let p = plan(&w, &cfg()).unwrap();
        assert_eq!(p.outcomes.len(), 9);
        assert!(p.outcomes.iter().all(|o| o.label == RiskClass::Safe && o.min_ttc.is_infinite()));
        assert_eq!(p.selected, MetaAction::new(Accelerate, Accelerate));
        assert_eq!(p.selection_reason, SelectionReason::MaxProgressAmongSafe);
        let end = p.planned_trajectory.samples.last().unwrap();
        assert!((end.distance - 39.0).abs() < 1e-9);
    }

    #[test]
    fn lead_vehicle_maintain_then_decelerate() {
        let s = synthetic::lead_vehicle("lv", 2.0);
        let w = extract_window(&s, 2.0, &cfg()).unwrap();
        let p = plan(&w, &cfg()).unwrap();
        let safe: Vec<MetaAction> = p
            .outcomes
            .iter()
            .filter(|o| o.label == RiskClass::Safe)
            .map(|o| o.action)
            .collect();
        assert_eq!(
            safe,
            vec![MetaAction::new(Maintain, Decelerate), MetaAction::new(Decelerate, Decelerate)]
        );
        assert_eq!(p.selected, MetaAction::new(Maintain, Decelerate));
        assert!((p.selected_outcome().progress - 26.0).abs() < 1e-9);

        let mm = &p.outcomes[4];
        assert_eq!(mm.action, MetaAction::new(Maintain, Maintain));
        assert!((mm.min_ttc - (50.0 - 20f64.sqrt() - 30.0) / 10.0).abs() < 1e-9);
        assert_eq!(mm.min_ttc_offset, Some(3.0));
        // Braking: TTC(o) = (50 - sqrt(20) - d(o)) / v(o) with d = 10o - o², v = 10 - 2o.
        // It dips slightly below its initial 4.553 s before rising.
        let dd = &p.outcomes[8];
        let expected = (0..=30)
            .map(|k| {
                let o = k as f64 * 0.1;
                (50.0 - 20f64.sqrt() - (10.0 * o - o * o)) / (10.0 - 2.0 * o)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((dd.min_ttc - expected).abs() < 1e-9);
        assert!((dd.min_ttc - 4.531).abs() < 1e-3);
        assert_eq!(dd.min_ttc_offset, Some(0.5));
    }

    #[test]
    fn head_on_all_unsafe() {
        let s = synthetic::head_on("h", 2.0, 1.0);
        let w = extract_window(&s, 2.0, &cfg()).unwrap();
        let p = plan(&w, &cfg()).unwrap();
        assert!(p.outcomes.iter().all(|o| o.label == RiskClass::Unsafe));
        assert_eq!(p.selection_reason, SelectionReason::MaxMinTtcAllUnsafe);
    }

    #[test]
    fn stopped_ego_stays_put() {
        let s = SceneBuilder::new("stop", 0.0, 4.0)
            .ego(AgentSpec::car("ego", Vec2::ZERO, Vec2::ZERO))
            .neighbor(AgentSpec::car("wall", Vec2::new(10.0, 0.0), Vec2::ZERO))
            .build();
        let w = extract_window(&s, 2.0, &cfg()).unwrap();
        let p = plan(&w, &cfg()).unwrap();
        assert!(p.selected_outcome().contact.is_none());
        assert_eq!(p.selected_outcome().label, RiskClass::Safe);
        for a in [MetaAction::new(Decelerate, Maintain), MetaAction::new(Decelerate, Decelerate)] {
            let o = p.outcomes.iter().find(|o| o.action == a).unwrap();
            assert!(o.rollout.samples.iter().all(|s| s.position == Vec2::ZERO));
        }
    }

    fn fake(action: MetaAction, label: RiskClass, min_ttc: f64, progress: f64) -> CounterfactualOutcome {
        CounterfactualOutcome {
            action,
            rollout: EgoRollout {
                meta_action: action,
                samples: vec![],
            },
            min_ttc,
            min_ttc_agent: None,
            min_ttc_offset: None,
            contact: None,
            label,
            progress,
        }
    }

    #[test]
    fn all_unsafe_picks_max_min_ttc() {
        let ttcs = [0.4, 0.5, 0.6, 0.9, 1.0, 1.2, 1.1, 1.5, 1.9];
        let outcomes: Vec<_> = crate::kinematics::enumerate_meta_actions()
            .into_iter()
            .zip(ttcs)
            .map(|(a, t)| fake(a, RiskClass::Unsafe, t, 1.0))
            .collect();
        let (a, r) = select_action(&outcomes).unwrap();
        assert_eq!(a, MetaAction::new(Decelerate, Decelerate));
        assert_eq!(r, SelectionReason::MaxMinTtcAllUnsafe);
    }

    #[test]
    fn contact_ranks_below_contact_free() {
        let mut outcomes: Vec<_> = crate::kinematics::enumerate_meta_actions()
            .into_iter()
            .map(|a| fake(a, RiskClass::Unsafe, 0.0, 1.0))
            .collect();
        for o in &mut outcomes {
            o.contact = Some(1.0);
        }
        outcomes[5].contact = None;
        outcomes[0].min_ttc = 2.0;
        let (a, _) = select_action(&outcomes).unwrap();
        assert_eq!(a, outcomes[5].action);
    }

    #[test]
    fn ties_break_canonically_and_count_is_checked() {
        let outcomes: Vec<_> = crate::kinematics::enumerate_meta_actions()
            .into_iter()
            .map(|a| fake(a, RiskClass::Safe, f64::INFINITY, 5.0))
            .collect();
        assert_eq!(select_action(&outcomes).unwrap().0, MetaAction::new(Accelerate, Accelerate));
        assert!(matches!(select_action(&outcomes[..8]), Err(Error::Structure(_))));
    }
}
