//! Simple-eigenvalue machinery: eigenpair extraction by inverse iteration and
//! left eigenvectors for spectral projections.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::linalg;
use crate::matrix::SquareMatrix;
use crate::tolerances;

/// A simple eigenvalue λ with a unit eigenvector and its spectral gap
/// (distance from λ to the rest of the spectrum).
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    pub vector: DVector<C64>,
    pub gap: f64,
}

impl EigenPair {
    /// Construct from known analytic data, normalizing the vector.
    pub fn from_parts(value: C64, vector: DVector<C64>, gap: f64) -> Self {
        let norm = vector.norm();
        Self {
            value,
            vector: vector / C64::new(norm, 0.0),
            gap,
        }
    }

    pub fn require_gap(&self, matrix_scale: f64) -> Result<()> {
        let tol = tolerances::GAP_TOL_REL * (1.0 + matrix_scale);
        if self.gap > tol {
            Ok(())
        } else {
            Err(Error::DegenerateEigenvalue {
                gap: self.gap,
                tol,
            })
        }
    }
}

/// Which eigenvalue of the spectrum to extract.
#[derive(Clone, Copy, Debug)]
pub enum EigenSelect {
    LargestModulus,
    ClosestTo(C64),
}

fn lift<T: Field>(m: &DMatrix<T>) -> DMatrix<C64> {
    m.map(|x| x.to_c64())
}

/// Deterministic starting vector for inverse iteration; no RNG involved so
/// eigenpair extraction is reproducible by itself.
fn seed_vector(n: usize) -> DVector<C64> {
    let v = DVector::from_fn(n, |i, _| {
        let x = ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5;
        let y = ((i as f64 + 1.0) * 0.569_840_290).fract() - 0.5;
        C64::new(1.0 + x, y)
    });
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

fn inverse_iteration(m: &DMatrix<C64>, lambda: C64) -> Result<DVector<C64>> {
    let n = m.nrows();
    let scale = m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    // Tiny shift off the exact eigenvalue keeps the solve well-posed; the
    // solution is still dominated by the target eigendirection.
    let shift = lambda + C64::new(1e-11 * (1.0 + scale), 1e-11 * (1.0 + scale));
    let shifted = m - DMatrix::<C64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut v = seed_vector(n);
    for _ in 0..4 {
        let solved = lu.solve(&v).ok_or(Error::Decomposition {
            kind: "inverse-iteration solve",
            dim: n,
            max_abs: scale,
        })?;
        let norm = solved.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Decomposition {
                kind: "inverse-iteration normalization",
                dim: n,
                max_abs: scale,
            });
        }
        v = solved / C64::new(norm, 0.0);
    }
    Ok(v)
}

fn spectral_gap(values: &[C64], chosen: usize) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != chosen)
        .map(|(_, z)| (z - values[chosen]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Extract a (right) eigenpair for the selected eigenvalue.
pub fn eigen_pair<T: Field>(a: &SquareMatrix<T>, select: EigenSelect) -> Result<EigenPair> {
    let values = linalg::eigenvalues(a)?;
    let chosen = match select {
        EigenSelect::LargestModulus => values
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().partial_cmp(&y.1.norm()).expect("finite"))
            .map(|(i, _)| i)
            .expect("dim >= 1"),
        EigenSelect::ClosestTo(z) => values
            .iter()
            .enumerate()
            .min_by(|x, y| {
                (x.1 - z)
                    .norm()
                    .partial_cmp(&(y.1 - z).norm())
                    .expect("finite")
            })
            .map(|(i, _)| i)
            .expect("dim >= 1"),
    };
    let lambda = values[chosen];
    let gap = if values.len() == 1 {
        f64::INFINITY
    } else {
        spectral_gap(&values, chosen)
    };

    let lifted = lift(a.inner());
    let vector = inverse_iteration(&lifted, lambda)?;

    // Rayleigh refinement of the eigenvalue to the computed direction.
    let refined = vector.adjoint() * &lifted * &vector;
    let value = refined[(0, 0)];

    let pair = EigenPair {
        value,
        vector,
        gap,
    };
    let residual = (&lifted * &pair.vector - &pair.vector * pair.value).norm();
    let norm = linalg::operator_norm(a)?;
    if residual > tolerances::EIGENPAIR_RESIDUAL_REL * (1.0 + norm) {
        return Err(Error::Decomposition {
            kind: "eigenpair refinement",
            dim: a.dim(),
            max_abs: residual,
        });
    }
    Ok(pair)
}

/// Unit left eigenvector w for λ: wᴴ A = λ wᴴ.
pub fn left_eigenvector<T: Field>(a: &SquareMatrix<T>, lambda: C64) -> Result<DVector<C64>> {
    let adjoint = lift(a.inner()).adjoint();
    inverse_iteration(&adjoint, lambda.conj())
}
