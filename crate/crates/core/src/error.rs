use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("need at least 2x2 elements, got {mx}x{my}")]
    TooFewElements { mx: usize, my: usize },
    #[error("field has {found} values but the grid stores {expected}")]
    ShapeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model grid does not match field grid")]
    DimensionMismatch,
    #[error("time step {dt} exceeds the explicit stability bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error("matrix is singular at elimination step {step} (column {column})")]
    Singular { step: usize, column: usize },
    #[error("right-hand side has length {found}, expected {expected}")]
    RhsLength { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error("subgrid resolution n = {0} is too small (need n >= 2)")]
    ResolutionTooSmall(usize),
    #[error("truncation orders must be at least 1")]
    EmptyTruncation,
    #[error("correction system: {0}")]
    Linear(#[from] LinearError),
    #[error("no convergence after {iterations} iterations; largest residual {largest:e} at order (gamma^{a}, alpha^{b})")]
    NonConvergence {
        iterations: usize,
        largest: f64,
        a: usize,
        b: usize,
    },
    #[error("residual at order (gamma^{a}, alpha^{b}) reappeared after convergence")]
    Regression { a: usize, b: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("dictionary for order (gamma^{a}, alpha^{b}) is linearly dependent")]
    DependentDictionary { a: usize, b: usize },
    #[error("dictionary for order (gamma^{a}, alpha^{b}) is incomplete; unexplained monomials: {monomials}")]
    Incomplete {
        a: usize,
        b: usize,
        monomials: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("Jacobian is numerically singular; the state may sit on a bifurcation")]
    SingularJacobian,
    #[error("branches have no common alpha range")]
    DisjointRanges,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsistencyError {
    #[error("consistency checks require full coupling gamma = 1, got {0}")]
    PartialCoupling(f64),
    #[error("need at least {needed} usable grid spacings, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("grid spacings must form a decreasing geometric sequence")]
    NotGeometric,
    #[error(transparent)]
    Model(#[from] ModelError),
}
