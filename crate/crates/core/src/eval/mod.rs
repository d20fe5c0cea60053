//! Prompting, response parsing, scoring and reporting.

mod metrics;
mod prompt;
mod remote;
mod report;
mod response;

pub use prompt::assemble_prompt;
pub use response::{
    parse_response, render_response, ResponseCritical, ResponsePlan, ResponseRecord, StageStatus,
};
pub use metrics::{
    collides_with_recorded, collision_rate, l2_error, l2_pair, language_correct, position_at,
    score_language, score_risk, trajectory_from_waypoints, L2Mode, RiskScore, LANGUAGE_FIELDS,
    POSITION_TOLERANCE,
};
pub use remote::{query_batch, query_remote_model, Endpoint, RemoteError};
pub use report::{score_sample, MetricsReport, ReportHeader, SampleScore};

use crate::annotator::build_record;
use crate::config::PlannerConfig;
use crate::error::Result;
use crate::scenario::Scenario;

/// Rule-based responder: the ground-truth pipeline at `t`, rendered as a
/// model response.
pub fn oracle_text(s: &Scenario, t: f64, cfg: &PlannerConfig) -> Result<String> {
    Ok(render_response(&build_record(s, t, cfg)?))
}

pub fn oracle_respond(s: &Scenario, t: f64, cfg: &PlannerConfig) -> Result<ResponseRecord> {
    oracle_text(s, t, cfg).map(|text| parse_response(&text))
}
