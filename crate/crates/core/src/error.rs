use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular transform: |m̂(λ)| = {modulus:e} at λ = {lambda}")]
    Singularity { lambda: String, modulus: f64 },
    #[error("sum-of-exponentials fit reached {terms} terms with max relative error {error:e} > {tol:e}")]
    FitFailure { terms: usize, error: f64, tol: f64 },
    #[error("contour quadrature did not settle at t = {t}, μ = {mu}: successive values differ by {gap:e}")]
    QuadratureDivergence { t: f64, mu: f64, gap: f64 },
    #[error("relaxation value {value} at t = {t}, μ = {mu} leaves [0, 1]; kernel is not completely positive")]
    RelaxationOutOfRange { t: f64, mu: f64, value: f64 },
    #[error("step too coarse at node {node}: off-diagonal weight {offdiag:e} dominates diagonal {diag:e}")]
    StepTooCoarse { node: usize, diag: f64, offdiag: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("Picard iteration is not contracting: ratios {0:?}")]
    NonContraction(Vec<f64>),
    #[error("regression needs at least 4 usable points, got {0}")]
    RegressionDegenerate(usize),
    #[error("radius {radius} outside (0, {limit})")]
    RadiusOutOfRange { radius: f64, limit: f64 },
    #[error("unsupported Lebesgue exponent p = {0} (expected 2, 4 or 6)")]
    UnsupportedNorm(u32),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("history evaluated at t = {t} outside its range [0, {end}]")]
    HistoryRange { t: f64, end: f64 },
    #[error("no dissipativity certificate: {0}")]
    Certificate(String),
    #[error("implicit memory step degenerate for mode μ = {mu}: denominator {denom:e}")]
    StepStability { mu: f64, denom: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
