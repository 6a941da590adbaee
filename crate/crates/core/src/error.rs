use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the toolkit. Every message is prefixed with the module
/// that produced it so CLI output can be traced back without a backtrace.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain_core: singular matrix (|det| = {det:e}, condition number ~ {condition:e})")]
    SingularMap { det: f64, condition: f64 },

    #[error("domain_core: expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    MapShape { expected: usize, rows: usize, cols: usize },

    #[error("domain_core: chart overflow, homogeneous coordinate <= 0 at {} point(s), first {:?}", points.len(), points.first())]
    ChartOverflow { points: Vec<Vec<f64>> },

    #[error("domain_core: point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("domain_core: dimension {0} is not supported (n must be 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("domain_core: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain_core: invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain_core: invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain_core: not strictly convex at {point:?} (min eigenvalue {min_eigenvalue:e})")]
    NotConvex { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("domain_core: potential must be negative, found {value:e} at {point:?}")]
    NotNegative { point: Vec<f64>, value: f64 },

    #[error("domain_core: base point is not a local minimum (|grad| = {gradient_norm:e})")]
    BaseNotMinimum { gradient_norm: f64 },

    #[error("domain_core: expected a {expected} field, found {found}")]
    RoleMismatch { expected: &'static str, found: &'static str },

    #[error("domain_core: stencil does not fit at node {node:?}")]
    StencilDoesNotFit { node: Vec<usize> },

    #[error("domain_core: potential spec: {0}")]
    PotentialSpec(String),

    #[error("legendre: gradient inversion failed at {point:?} (residual {residual:e})")]
    NewtonInversion { point: Vec<f64>, residual: f64 },

    #[error("legendre: minimum is not at the origin (|grad f(0)| = {gradient_norm:e})")]
    MinimumNotAtOrigin { gradient_norm: f64 },

    #[error("affine_invariants: position vector tangent at {point:?} (Legendre value {legendre:e})")]
    Tangency { point: Vec<f64>, legendre: f64 },

    #[error("affine_invariants: dual point inversion failed at {point:?} (residual {residual:e})")]
    DualInversion { point: Vec<f64>, residual: f64 },

    #[error("affine_invariants: conormal frame degenerate (condition number {condition:e})")]
    FrameDegenerate { condition: f64 },

    #[error("affine_invariants: segment leaves the domain at z = {z}")]
    SegmentExitsDomain { z: f64 },

    #[error("affine_invariants: quadrature did not reach tolerance (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("ma_solver: damping exhausted at iteration {iteration} (residual {residual:e})")]
    DampingExhausted { iteration: usize, residual: f64 },

    #[error("ma_solver: no convergence after {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("ma_solver: linear solve failed: {0}")]
    LinearSolve(String),

    #[error("ma_solver: initial guess rejected: {0}")]
    InitialGuess(String),

    #[error("ma_solver: invalid configuration: {0}")]
    Config(String),

    #[error("verify_harness: sublevel set for h = {h} is empty")]
    EmptySublevel { h: f64 },

    #[error("verify_harness: {0}")]
    Study(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::PotentialSpec(e.to_string())
    }
}
