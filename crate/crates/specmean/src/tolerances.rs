//! Central numerical tolerances.
//!
//! Every threshold used by the library lives here so the accuracy contract
//! is auditable in one place.

/// Determinant deviation allowed for a matrix flagged special-linear.
pub const DET_TOL: f64 = 1e-10;

/// Max-entry residual of AᴴA − I allowed for a matrix flagged orthogonal/unitary.
pub const ORTHO_TOL: f64 = 1e-10;

/// Below this |det|, a matrix is treated as singular (no SL normalization).
pub const SINGULAR_TOL: f64 = 1e-12;

/// Relative tolerance for Πσᵢ = |det A| on computed singular spectra.
pub const SV_PRODUCT_REL_TOL: f64 = 1e-8;

/// Relative reconstruction tolerance for the SVD factors: ‖P₁ Σ P₂ − A‖max ≤ tol·σ₁.
pub const SVD_RECONSTRUCTION_REL_TOL: f64 = 1e-10;

/// Entrywise agreement of singular spectra under one-sided orthogonal multiplication.
pub const SV_INVARIANCE_TOL: f64 = 1e-10;

/// Zero-sum tolerance for exponent vectors flagged traceless.
pub const TRACELESS_TOL: f64 = 1e-12;

/// max(|d₁|,|dₙ|) = 1 tolerance for exponent vectors flagged normalized.
pub const EXPONENT_NORMALIZED_TOL: f64 = 1e-12;

/// Product-one tolerance for weight vectors flagged sl-normalized.
pub const WEIGHT_PRODUCT_TOL: f64 = 1e-10;

/// Unit-norm tolerance for sphere samples.
pub const SPHERE_NORM_TOL: f64 = 1e-14;

/// Relative residual ‖Av − λv‖ ≤ tol·‖A‖ accepted for an eigenpair.
pub const EIGENPAIR_RESIDUAL_REL: f64 = 1e-9;

/// Unit-norm tolerance for stored eigenvectors.
pub const EIGENVECTOR_NORM_TOL: f64 = 1e-12;

/// Relative spectral-gap floor below which an eigenvalue is treated as degenerate
/// for perturbation-derivative purposes.
pub const GAP_TOL_REL: f64 = 1e-6;

/// Step for central finite differences validating first-order eigenvalue derivatives.
pub const FD_STEP: f64 = 1e-4;

/// Accepted mismatch between an analytic eigenvalue derivative and its central
/// finite difference at [`FD_STEP`], relative to 1 + |λ|.
pub const FD_REL_TOL: f64 = 1e-6;

/// Disk membership slack in eigenvalue containment checks, relative to 1 + ‖A‖.
pub const CONTAINMENT_TOL_REL: f64 = 1e-9;

/// Allowed recomputation drift of a Gershgorin radius from its source matrix.
pub const DISK_RECOMPUTE_TOL: f64 = 1e-12;

/// Every log ρ(AX) sample with |det A| = 1 and X in the group must clear this floor.
pub const LOCALIZED_FLOOR: f64 = -1e-10;

/// Below this log σ₁, the ratio 𝔄/log σ₁ is reported as undefined: the numerator
/// scales like the distance to the identity while the Monte Carlo error does not.
pub const RATIO_FLOOR: f64 = 1e-6;

/// Sample-size cap for the sign-certification escalation policy.
pub const ESCALATION_CAP: usize = 10_000_000;

/// Mass-normalization tolerance for measures on the circle.
pub const MEASURE_MASS_TOL: f64 = 1e-12;

/// Quadrature accuracy target for the dimension-2 arc integrals.
pub const ARC_QUADRATURE_TOL: f64 = 1e-12;

