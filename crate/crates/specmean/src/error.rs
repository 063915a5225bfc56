use thiserror::Error;

/// Errors produced by the numerical operations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An underlying matrix decomposition failed to converge.
    #[error("{kind} failed for {dim}x{dim} matrix (max |entry| {max_abs:.3e})")]
    Decomposition {
        kind: &'static str,
        dim: usize,
        max_abs: f64,
    },

    /// |det| below the singularity threshold where an inverse-scale is required.
    #[error("matrix is numerically singular (|det| = {det_abs:.3e})")]
    SingularMatrix { det_abs: f64 },

    /// Real matrix with negative determinant passed where det > 0 is required.
    #[error("negative orientation (det = {det:.6e}); flip a row before SL normalization")]
    NegativeOrientation { det: f64 },

    /// Operation requires a special-linear input.
    #[error("matrix is not special-linear: |det - 1| = {deviation:.3e} exceeds {tol:.1e}")]
    NotSpecialLinear { deviation: f64, tol: f64 },

    /// Invalid argument outside any more specific category.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Perturbation scale outside the regime where the bracket is meaningful.
    #[error("perturbation scale t = {t} is out of regime (requires t < {limit})")]
    OutOfRegime { t: f64, limit: f64 },

    /// Eigenvalue too close to the rest of the spectrum for derivative use.
    #[error("degenerate eigenvalue: gap {gap:.3e} below threshold {tol:.3e}")]
    DegenerateEigenvalue { gap: f64, tol: f64 },

    /// Requested construction does not exist at this dimension or parameter.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
