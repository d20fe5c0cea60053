//! Counterfactual meta-action planning and risk labeling for driving scenes.
//!
//! The crate covers the whole offline pipeline: scenario ingestion and
//! observation windows ([`scenario`]), closed-form meta-action rollouts
//! ([`kinematics`]), TTC and contact checks ([`risk`]), the two-layer action
//! tree ([`planner`]), five-stage ground-truth annotation ([`annotator`]),
//! and prompt/response/metric tooling for scoring models ([`eval`]).

pub mod annotator;
pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod json;
pub mod kinematics;
pub mod planner;
pub mod risk;
pub mod scenario;
pub mod synthetic;

pub use config::PlannerConfig;
pub use error::{Error, Result};
