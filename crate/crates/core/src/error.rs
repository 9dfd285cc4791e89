use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("iterative solver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid constraint set: {0}")]
    InvalidSet(String),

    #[error("invalid set descriptor: {0}")]
    Descriptor(String),

    #[error("negative radius {0}")]
    NegativeRadius(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("averaged objective still increasing at t = {0}")]
    BracketFailure(f64),

    #[error("point {0} is not on the curve grid")]
    PointsNotOnGrid(f64),

    #[error("t_mu must be positive, got {0}")]
    NonPositiveTmu(f64),

    #[error("log-log fit needs positive values, got {0}")]
    NonPositiveValue(f64),

    #[error("log-log fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("bad design: {0}")]
    BadDesign(String),

    #[error("truth is not monotone at index {0}")]
    NonMonotoneTruth(usize),
}
