use thiserror::Error;

/// Errors produced by construction and by operations whose preconditions fail.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate point label `{0}`")]
    DuplicatePoint(String),
    #[error("point `{0}` appears in more than one class")]
    OverlappingPoint(String),
    #[error("point `{0}` is not covered by any class")]
    UncoveredPoint(String),
    #[error("unknown point label `{0}`")]
    UnknownPoint(String),
    #[error("map sends `{0}` outside the point space")]
    MapOutsideSpace(String),
    #[error("kernel row at `{y}` carries mass {mass:e} at `{x}`, outside the class of `{y}`")]
    SupportViolation { y: String, x: String, mass: f64 },
    #[error("modular function has no entry for the in-class pair (`{x}`, `{y}`)")]
    MissingModularEntry { x: String, y: String },
    #[error("potential is not Haar-normalized: class `{class}` has residual {residual:e}; run normalize() first")]
    NotNormalized { class: String, residual: f64 },
    #[error("measure is not a probability: total mass {total}")]
    NotProbability { total: f64 },
    #[error("kernel row at `{y}` has total mass {sum}, expected 1")]
    RowNotUnitMass { y: String, sum: f64 },
    #[error("transverse-measure evaluator does not send the reference transverse function to 1 (got {got})")]
    EvaluatorNotNormalized { got: f64 },
    #[error("objects built over different groupoids (sizes {left} vs {right})")]
    GroupoidMismatch { left: usize, right: usize },
    #[error("transverse function has mass {mass:e} at `{point}` where the reference weight is zero; no density exists")]
    NoDensity { point: String, mass: f64 },
    #[error("sample pair {index} is inconsistent: {what} residual {residual:e}")]
    InconsistentSample { index: usize, what: String, residual: f64 },
    #[error("{case} closed form requires {requirement}")]
    CaseMismatch { case: String, requirement: String },
    #[error("iteration did not converge after {iters} steps (residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("measure is not invariant under the map: atom `{atom}` has residual {residual:e}")]
    NotInvariant { atom: String, residual: f64 },
    #[error("state {state} has zero stationary mass")]
    ZeroStationaryMass { state: usize },
    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("stationary vector fails pi P = pi at state {state} (residual {residual:e})")]
    NotStationary { state: usize, residual: f64 },
    #[error("requested depth {requested} exceeds available cylinder depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("cylinder table has length {got}, expected {expected} for depth {depth}")]
    BadTableLength { got: usize, expected: usize, depth: usize },
    #[error("a priori weights must be nonnegative and sum to 1 (sum {sum})")]
    BadAPriori { sum: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
