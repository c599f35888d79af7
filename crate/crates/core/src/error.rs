use thiserror::Error;

use crate::Time;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model `{model}`: {reason}")]
    Validation { model: String, reason: String },
    #[error("`{model}` is not deterministic: {reason}")]
    Nondeterministic { model: String, reason: String },
    #[error("invariant violated; at most {max_delay} time units may elapse")]
    InvariantViolation { max_delay: Time },
    #[error("action `{0}` is not enabled")]
    NotEnabled(String),
    #[error("target invariant violated after `{0}`")]
    TargetInvariantViolated(String),
    #[error("no successor")]
    EmptyResult,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("initial state is losing: {0}")]
    InitialStateLosing(String),
    #[error("unbounded recovery undecided: bounds {small} and {large} give different strategies")]
    UnboundedRecoveryUndecided { small: i64, large: i64 },
    #[error("fault instances exceed cap {cap} ({count} generated)")]
    FaultCapExceeded { cap: usize, count: usize },
    #[error("event time {time} is before {last}")]
    TimeRegression { time: Time, last: Time },
    #[error("action `{0}` is not allowed by the shield")]
    ActionRejected(String),
    #[error("deadline at {0} passed without an action")]
    DeadlineMissed(Time),
    #[error("shield state corrupt: {0}")]
    ShieldStateCorrupt(String),
    #[error("fixpoint did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("empty winning region")]
    EmptyWinningRegion,
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
