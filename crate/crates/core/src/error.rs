use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid algebra spec: {0}")]
    InvalidSpec(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("precondition failed: the {set} set is not starshaped about the center ({} violations)", report.violations.len())]
    NotStarshaped {
        set: String,
        report: Box<crate::geometry::StarReport>,
    },

    #[error("degenerate condenser: {0}")]
    DegenerateCondenser(String),

    #[error("degenerate condenser: no dilation factor up to {cap} maps the inner set over the outer one")]
    UnboundedCondenser { cap: f64 },

    #[error("solver did not converge after {iterations} iterations (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
