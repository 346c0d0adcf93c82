use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the solvers.
///
/// Numeric payloads are widened to `f64` so the error type does not depend
/// on the scalar parameter.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("{name} must be symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { name: &'static str, asymmetry: f64 },

    #[error("iteration failed to converge in {context}")]
    NoConvergence { context: &'static str },

    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("eigenvalues on the imaginary axis: {}", format_eigs(.eigenvalues))]
    ImaginaryAxisEigenvalue { eigenvalues: Vec<Complex64> },

    #[error("expected {expected} stable eigenvalues, found {stable}")]
    DichotomySplitFailure { stable: usize, expected: usize },

    #[error("stable invariant subspace is not a graph subspace (condition {condition:e})")]
    GraphSubspaceFailure { condition: f64 },

    #[error("pair is not stabilizable: rank deficiency at eigenvalue {} (smallest singular value {min_singular:e})", format_eig(.eigenvalue))]
    StabilizabilityFailure {
        eigenvalue: Complex64,
        min_singular: f64,
    },

    #[error("R must be positive definite (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveR { min_eigenvalue: f64 },

    #[error("{what} is not stable (spectral abscissa {abscissa:e})")]
    StabilityCheckFailure { what: &'static str, abscissa: f64 },

    #[error("consistency check failed for {what}: discrepancy {gap:e}")]
    ConsistencyCheck { what: &'static str, gap: f64 },

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn format_eig(z: &Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.6e}", z.re)
    } else {
        format!("{:.6e}{:+.6e}i", z.re, z.im)
    }
}

fn format_eigs(zs: &[Complex64]) -> String {
    zs.iter().map(format_eig).collect::<Vec<_>>().join(", ")
}
