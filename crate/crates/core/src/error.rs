use thiserror::Error;

/// Errors raised while building, validating or analysing finite metric spaces.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QhmError {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    NonSquare { row: usize, len: usize, n: usize },

    #[error("distance matrix is empty")]
    EmptyMatrix,

    #[error("label count {labels} does not match point count {n}")]
    LabelCount { labels: usize, n: usize },

    #[error("asymmetry |d({i},{j}) - d({j},{i})| = {diff:e} exceeds tolerance {tol:e}")]
    AsymmetryExceedsTolerance { i: usize, j: usize, diff: f64, tol: f64 },

    #[error("entry ({i},{j}) = {value} is negative or not finite")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("diagonal entry ({i},{i}) = {value} is not zero")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("distinct points {i} and {j} are at distance zero")]
    CoincidentPoints { i: usize, j: usize },

    #[error("triangle inequality violated at ({i},{j},{k}): d({i},{j}) = {lhs} > d({i},{k}) + d({k},{j}) = {rhs}")]
    TriangleViolation { i: usize, j: usize, k: usize, lhs: f64, rhs: f64 },

    #[error("subspace selection is empty")]
    EmptySelection,

    #[error("index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("index {index} selected more than once")]
    DuplicateIndex { index: usize },

    #[error("cross distance too small: 2c = {two_c} < {bound} = diameter of {component}")]
    CrossDistanceTooSmall { two_c: f64, bound: f64, component: &'static str },

    #[error("interval [{a}, {b}] is degenerate")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("points {i} and {j} coincide")]
    DuplicatePoint { i: usize, j: usize },

    #[error("point {i} has {got} coordinates, expected {expected}")]
    DimensionMismatch { i: usize, got: usize, expected: usize },

    #[error("coordinate of point {i} is not finite")]
    NonFiniteCoordinate { i: usize },

    #[error("measure has {weights} weights but space '{space}' has {n} points")]
    SpaceMismatch { space: String, weights: usize, n: usize },

    #[error("measure weight {index} is not finite")]
    NonFiniteWeight { index: usize },

    #[error("measure has mass {mass:e}, expected zero (tolerance {tol:e})")]
    NonzeroMass { mass: f64, tol: f64 },

    #[error("measure has mass {mass}, expected one (tolerance {tol:e})")]
    NotUnitMass { mass: f64, tol: f64 },

    #[error("symmetric eigendecomposition failed (condition estimate {condition:e})")]
    EigendecompositionFailure { condition: f64 },

    #[error("operation requires a non-strict classification, got {verdict}")]
    NotApplicable { verdict: String },

    #[error("kernel vector {index} has potential deviation {deviation:e} > {tol:e}")]
    FlatnessViolation { index: usize, deviation: f64, tol: f64 },

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("inconsistent decision: {0}")]
    Inconsistency(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("input measure {which} is not invariant: deviation {deviation:e} > {tol:e}")]
    NotInvariantInput { which: &'static str, deviation: f64, tol: f64 },

    #[error("chain level {level} is not a restriction of the top space: {detail}")]
    ChainMismatch { level: usize, detail: String },

    #[error("unknown fixture '{key}'; available: {available}")]
    UnknownFixture { key: String, available: String },

    #[error("closed-form prediction {predicted} disagrees with direct solve {solved} at size {size}")]
    PredictionMismatch { size: usize, predicted: f64, solved: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl QhmError {
    /// True for errors that stem from invalid input data rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            QhmError::EigendecompositionFailure { .. }
                | QhmError::SolverBreakdown(_)
                | QhmError::Inconsistency(_)
                | QhmError::FlatnessViolation { .. }
                | QhmError::PredictionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, QhmError>;
