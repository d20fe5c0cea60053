use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest sample gap (seconds) bridged by linear interpolation.
pub const MAX_INTERPOLATION_GAP: f64 = 0.3;

/// Tolerance used when comparing timestamps and grid offsets.
pub const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionModel {
    #[default]
    ConstantVelocity,
}

/// Timing, kinematic and risk parameters shared by every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Length of the observation history window (s).
    pub history_window: f64,
    /// End of the short-term decision segment (s).
    pub short_horizon: f64,
    /// End of the long-term decision segment, i.e. the planning horizon (s).
    pub plan_horizon: f64,
    pub rollout_dt: f64,
    /// Magnitude of the acceleration applied by accelerate/decelerate (m/s²).
    pub accel_step: f64,
    pub ttc_threshold: f64,
    /// Radius for neighbors shown to a model (prompt window).
    pub neighbor_radius: f64,
    /// Radius for neighbors considered by ground-truth risk assessment.
    pub assessment_radius: f64,
    pub preimpact_window: f64,
    pub stride: f64,
    pub prediction_model: PredictionModel,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            history_window: 1.5,
            short_horizon: 1.0,
            plan_horizon: 3.0,
            rollout_dt: 0.1,
            accel_step: 2.0,
            ttc_threshold: 3.0,
            neighbor_radius: 30.0,
            assessment_radius: 100.0,
            preimpact_window: 3.0,
            stride: 0.5,
            prediction_model: PredictionModel::ConstantVelocity,
        }
    }
}

fn whole_steps(span: f64, dt: f64) -> Option<usize> {
    let steps = (span / dt).round();
    if steps < 1.0 || (steps * dt - span).abs() > 1e-9 {
        None
    } else {
        Some(steps as usize)
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("history_window", self.history_window),
            ("short_horizon", self.short_horizon),
            ("plan_horizon", self.plan_horizon),
            ("rollout_dt", self.rollout_dt),
            ("accel_step", self.accel_step),
            ("ttc_threshold", self.ttc_threshold),
            ("neighbor_radius", self.neighbor_radius),
            ("assessment_radius", self.assessment_radius),
            ("preimpact_window", self.preimpact_window),
            ("stride", self.stride),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.short_horizon >= self.plan_horizon {
            return Err(Error::Config(format!(
                "short_horizon ({}) must be below plan_horizon ({})",
                self.short_horizon, self.plan_horizon
            )));
        }
        if self.assessment_radius < self.neighbor_radius {
            return Err(Error::Config(format!(
                "assessment_radius ({}) must not be below neighbor_radius ({})",
                self.assessment_radius, self.neighbor_radius
            )));
        }
        if whole_steps(self.short_horizon, self.rollout_dt).is_none()
            || whole_steps(self.plan_horizon - self.short_horizon, self.rollout_dt).is_none()
        {
            return Err(Error::Config(format!(
                "rollout_dt ({}) must divide short_horizon and plan_horizon - short_horizon",
                self.rollout_dt
            )));
        }
        Ok(())
    }

    /// Grid index of the short/long segment boundary.
    pub fn short_steps(&self) -> usize {
        whole_steps(self.short_horizon, self.rollout_dt).unwrap_or(1)
    }

    /// Number of rollout intervals over the planning horizon.
    pub fn horizon_steps(&self) -> usize {
        self.short_steps()
            + whole_steps(self.plan_horizon - self.short_horizon, self.rollout_dt).unwrap_or(1)
    }

    /// Number of intervals in the history window (may be fractional-free only approximately).
    pub fn history_steps(&self) -> usize {
        (self.history_window / self.rollout_dt + 1e-9).floor() as usize
    }

    /// Copy of this config whose window radius is the assessment radius.
    pub fn for_assessment(&self) -> PlannerConfig {
        PlannerConfig {
            neighbor_radius: self.assessment_radius,
            ..self.clone()
        }
    }

    /// Rollout grid offset for index `k`.
    pub fn offset(&self, k: usize) -> f64 {
        k as f64 * self.rollout_dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = PlannerConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.short_steps(), 10);
        assert_eq!(cfg.horizon_steps(), 30);
        assert_eq!(cfg.history_steps(), 15);
    }

    #[test]
    fn rejects_inverted_horizons() {
        let cfg = PlannerConfig {
            short_horizon: 3.0,
            plan_horizon: 3.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_non_dividing_step() {
        let cfg = PlannerConfig {
            rollout_dt: 0.3,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_nonpositive_fields() {
        let cfg = PlannerConfig {
            stride: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = PlannerConfig {
            ttc_threshold: f64::NAN,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
