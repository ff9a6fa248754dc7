use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid radii: {0}")]
    InvalidRadii(String),
    #[error("two charges coincide (pairwise distance {distance:e})")]
    CoincidentCharges { distance: f64 },
    #[error("no Newton start reached the gradient tolerance {tol:e}; best sup-norm was {best:e}")]
    ConvergenceFailure { tol: f64, best: f64 },
    #[error("degenerate radii for the collinear cost: largest equals smallest ({0})")]
    DegenerateRadii(f64),
    #[error("radii must satisfy 0 < r1 <= r2 <= r3, got {0:?}")]
    UnsortedRadii(Vec<f64>),
    #[error("input must be strictly increasing and positive, got {0:?}")]
    UnsortedInput(Vec<f64>),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("pattern {0:?} does not give a cyclical map with T^(N) = Id")]
    InadmissiblePattern(String),
    #[error("point {x} lies on breakpoint {breakpoint}")]
    BreakpointHit { x: f64, breakpoint: f64 },
    #[error("tuples have different arity ({0} vs {1})")]
    ArityMismatch(usize, usize),
    #[error("coordinates of the two tuples are not pairwise distinct")]
    DuplicateCoordinates,
    #[error("problem too large: {0}")]
    ResourceLimit(String),
    #[error("rounding orbits to atoms breaks the marginals (n = {0})")]
    RoundingInfeasible(usize),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
