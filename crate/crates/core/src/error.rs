use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cotangent evaluated at a pole of sin (theta = {theta})")]
    Pole { theta: f64 },

    #[error("phase is infeasible: a - theta0*cot(lambda) = {margin} <= 0")]
    InfeasiblePhase { margin: f64 },

    #[error("curve left the admissible region at xi = {xi}: {reason}")]
    CurveEscape { xi: f64, reason: String },

    #[error("could not bracket a root of theta*cot(theta) = {a} on ({lo}, {hi})")]
    BranchRootFailure { a: f64, lo: f64, hi: f64 },

    #[error("no hyperbolic third mode found for wavenumbers ({k1}, {k2}, {k3})")]
    NoThirdMode { k1: u32, k2: u32, k3: u32 },

    #[error("invalid wavenumbers: {0}")]
    InvalidWavenumbers(String),

    #[error("surface collapsed onto the bed: min(1 + eta) = {min_depth}")]
    DomainCollapse { min_depth: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("amplitudes {t:?} lie outside the admissible region of case {case}")]
    AdmissibilityViolation { t: [f64; 3], case: String },

    #[error("degenerate triple {0:?}: entries coincide after gcd reduction")]
    DegenerateTriple([u64; 3]),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
