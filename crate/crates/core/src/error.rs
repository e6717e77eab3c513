use thiserror::Error;

use crate::variational::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time scale: {0}")]
    InvalidTimeScale(String),

    #[error("{0} is not a member of the time scale")]
    NotInTimeScale(f64),

    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("sampling step must be positive, got {0}")]
    StepNotPositive(f64),

    #[error("delta derivative or forward jump undefined at t = {0} (no forward neighbour on the grid)")]
    BoundaryUndefined(f64),

    #[error("{0} is not a node of the sample grid")]
    NodeNotInGrid(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid functions are not defined on the same grid")]
    GridMismatch,

    #[error("need at least {needed} horizons, got {got}")]
    InsufficientHorizons { needed: usize, got: usize },

    #[error("horizons must be strictly increasing members of the time scale")]
    InvalidHorizons,

    #[error("grid too small: need at least {needed} nodes, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("inadmissible path: x(a) = {got:?}, expected {expected:?}")]
    InadmissiblePath { expected: Vec<f64>, got: Vec<f64> },

    #[error("inadmissible variation: p(a) = {0:?} must vanish")]
    InadmissibleVariation(Vec<f64>),

    #[error("epsilon must be non-zero")]
    ZeroEpsilon,

    #[error("analytic partial {which} disagrees with finite differences at t={t}: analytic {analytic}, numeric {numeric}")]
    PartialsMismatch {
        which: &'static str,
        t: f64,
        analytic: f64,
        numeric: f64,
    },

    #[error("objective is not finite")]
    NonFiniteObjective,

    #[error("solver stopped after {} iterations with gradient norm {:.3e}", .0.iterations, .0.grad_norm)]
    MaxIterExceeded(Box<Solution>),

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("evaluation produced a non-finite value at t = {0}")]
    NonFinite(f64),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }
}
