use thiserror::Error;

/// Errors surfaced by game construction, payoff computation, and the solver.
#[derive(Debug, Error)]
pub enum AggError {
    #[error("agent {agent} chose action {action}, which is not in its action set")]
    ChoiceOutsideActionSet { agent: usize, action: usize },

    #[error("no utility entry for action {action} at neighbour counts {counts:?}")]
    MissingUtilityEntry { action: usize, counts: Vec<u32> },

    #[error("enumeration size {size} exceeds cap {cap}; use the projected or partitioned method")]
    EnumerationCapExceeded { size: u128, cap: u128 },

    #[error("operation requires identical action sets for all agents")]
    NotSymmetric,

    #[error("operation requires a linear utility function")]
    NotLinearUtility,

    #[error("cannot move an agent off node {node}: its count is zero")]
    MoveFromEmptyNode { node: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("arithmetic overflow computing {context}")]
    Overflow { context: String },

    #[error("agent {agent} has an empty action set")]
    EmptyActionSet { agent: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("continuation path stalled at lambda={lambda} (step size underflow); residual={residual}; last point {point:?}")]
    PathStall {
        lambda: f64,
        residual: f64,
        point: Vec<f64>,
    },

    #[error("step budget of {max_steps} exceeded at lambda={lambda}")]
    StepBudgetExceeded { max_steps: usize, lambda: f64 },

    #[error("unsupported file version {0} (expected 1)")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AggError>;
