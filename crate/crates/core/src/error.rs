use thiserror::Error;

/// Errors raised by the planning and annotation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or record failed to decode.
    #[error("parse error at {locus}: {message}")]
    Parse { locus: String, message: String },

    /// Input decoded but violates a structural requirement.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("time {t} s outside [{start}, {end}]")]
    Range { t: f64, start: f64, end: f64 },

    #[error("insufficient history for agent {agent_id} at t = {t} s: {detail}")]
    InsufficientHistory {
        agent_id: String,
        t: f64,
        detail: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("sample grids do not align: {0}")]
    GridMismatch(String),

    #[error("scoring error: {0}")]
    Scoring(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(locus: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            locus: locus.into(),
            message: message.into(),
        }
    }
}
