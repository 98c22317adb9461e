use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point {x} lies outside the interval ({lo}, {hi})")]
    OutOfInterval { x: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("J is singular")]
    SingularJ,

    #[error("B+ is singular at {}", .position.map_or("an unplaced atom".to_string(), |x| x.to_string()))]
    SingularAtom { position: Option<f64> },

    #[error("right-hand side is not representable: {0}")]
    NotRepresentable(String),

    #[error("empty window ({0}, {1})")]
    EmptyWindow(f64, f64),

    #[error("vector is not in ker B_m* (distance {distance:e})")]
    NotInKernel { distance: f64 },

    #[error("lift assignments disagree on the overlap (defect {defect:e})")]
    InconsistentLift { defect: f64 },

    #[error("lifted ker B* vector does not vanish at the window ends (defect {defect:e})")]
    LiftEndpointNonzero { defect: f64 },

    #[error("functions live on different windows")]
    WindowMismatch,

    #[error("invalid problem: failed checks {0:?}")]
    InvalidProblem(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no right-hand side f supplied")]
    MissingRhs,
}

pub type Result<T> = std::result::Result<T, Error>;
