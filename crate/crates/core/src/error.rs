use thiserror::Error;

use crate::l1::L1Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unsupported qubit count {0} (supported range is 1..=4)")]
    UnsupportedQubitCount(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear system is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("simplex iteration limit of {limit} pivots exceeded")]
    IterationLimit {
        limit: usize,
        incumbent: Box<L1Solution>,
    },

    #[error("simplex lost numerical stability: {0}")]
    Numerical(String),

    #[error("SRE undefined for mixed states (purity {purity:.12})")]
    MixedStateSre { purity: f64 },

    #[error(
        "superselected entanglement is only available for pure states; \
         the mixed-state formulas are not implemented (purity {purity:.12})"
    )]
    MixedStateEntanglement { purity: f64 },

    #[error("no sign change of the magic indicator in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("catalog cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
