use thiserror::Error;

/// Diagnostics for one degree probed by an escalating certificate search.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeAttempt {
    pub degree: usize,
    /// `"infeasible"`, `"iteration-budget"`, `"structural"`, or `"residual"`.
    pub outcome: String,
    pub iterations: usize,
    /// Best min-eigenvalue slack reached (or the dual bound on it when infeasible).
    pub slack: f64,
    pub residual: f64,
}

/// Why a certificate search ended without a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct NotFound {
    /// Highest witness degree tried; `None` when the necessity screen stopped the search.
    pub highest_degree: Option<usize>,
    pub attempts: Vec<DegreeAttempt>,
    /// Point `z` where the target evaluated at `(z̄, z)` has a negative eigenvalue.
    pub screen_witness: Option<Vec<(f64, f64)>>,
    /// Smallest eigenvalue found by the screen at the witness.
    pub screen_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tuple does not commute: |T{i}T{j} - T{j}T{i}| = {norm:e} exceeds {tol:e}")]
    CommutationViolation { i: usize, j: usize, norm: f64, tol: f64 },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("basis misses support monomial {0:?}")]
    BasisMissesSupport(Vec<u32>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot establish a bounding box for the domain: {0}")]
    BoundingBox(String),

    #[error("matrix is indefinite beyond tolerance (min eigenvalue {0:e})")]
    Indefinite(f64),

    #[error("target has degree {target} outside the ansatz window {window}")]
    DegreeWindow { target: usize, window: usize },

    #[error("no certificate found {}", match .0.highest_degree {
        Some(d) => format!("up to degree {d}"),
        None => "(rejected by the necessity screen)".to_string(),
    })]
    NotFound(Box<NotFound>),

    #[error("screen failed: {reason} at z = {point:?} (value {value:e})")]
    ScreenFailure { reason: String, point: Vec<(f64, f64)>, value: f64 },

    #[error("certificate inconsistent with the lurking-contraction identity (mismatch {0:e})")]
    Consistency(f64),

    #[error("colligation is not contractive: sigma_max = {0}")]
    ContractionViolation(f64),

    #[error("resolvent is near-singular (condition number {0:e})")]
    NearSingular(f64),

    #[error("determinant is not divisible by p: remainder norm {0:e}")]
    DivisionRemainder(f64),

    #[error("no positive scale is certifiable at degree {0}")]
    NoScale(usize),

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
