mod annotate;
mod evaluate;
mod plan;
mod simulate;
mod synth;

pub use annotate::{annotate, split, split_line, AnnotateSummary};
pub use evaluate::{evaluate, prompt, score};
pub use plan::{plan_scene, OutcomeRow, PlanReport};
pub use simulate::{replay, simulate, Decision, Replay, SimulationReport};
pub use synth::synth;
