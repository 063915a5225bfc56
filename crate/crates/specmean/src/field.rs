use nalgebra::{ComplexField, DMatrix};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Complex double-precision scalar, the common eigenvalue type for both fields.
pub type C64 = nalgebra::Complex<f64>;

/// Scalar field marker: the real path runs on `f64`, the complex path on [`C64`].
///
/// Everything downstream (matrices, decompositions, samplers) is generic over
/// this trait, so the two paths share one implementation.
pub trait Field:
    ComplexField<RealField = f64> + Copy + Send + Sync + PartialEq + std::fmt::Debug + 'static
{
    /// Tag used in the JSON matrix format.
    const NAME: &'static str;

    fn from_re(x: f64) -> Self;
    fn to_c64(self) -> C64;

    /// Standard Gaussian entry for Haar sampling (each real component N(0,1)).
    fn gaussian(rng: &mut ChaCha8Rng) -> Self;

    /// All eigenvalues of a square matrix over this field, unordered.
    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<C64>>;

    fn entry_to_json(self) -> serde_json::Value;
    fn entry_from_json(v: &serde_json::Value) -> Result<Self>;
}

fn schur_iterations(dim: usize) -> usize {
    (100 * dim).max(1_000)
}

fn decomposition_failure<T: Field>(kind: &'static str, m: &DMatrix<T>) -> Error {
    let max_abs = m.iter().map(|&x| x.modulus()).fold(0.0, f64::max);
    Error::Decomposition {
        kind,
        dim: m.nrows(),
        max_abs,
    }
}

/// Conjugate by a fixed pseudo-random orthogonal/unitary similarity.
///
/// The Francis/Wilkinson shift strategy can cycle on rare matrices; a
/// similarity leaves the spectrum untouched while sending the QR iteration
/// down a different path. Seeds are fixed, so retries are reproducible.
fn similarity_rescue<T: Field>(m: &DMatrix<T>, attempt: u64) -> DMatrix<T> {
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e5c_0e00 ^ attempt);
    let g = DMatrix::from_fn(n, n, |_, _| T::gaussian(&mut rng));
    let q = g.qr().q();
    q.adjoint() * m * q
}

fn schur_with_rescue<T: Field, E>(
    m: &DMatrix<T>,
    extract: impl Fn(nalgebra::linalg::Schur<T, nalgebra::Dyn>) -> E,
    kind: &'static str,
) -> Result<E> {
    let iterations = schur_iterations(m.nrows());
    if let Some(schur) = m.clone().try_schur(f64::EPSILON, iterations) {
        return Ok(extract(schur));
    }
    for attempt in 1..=4u64 {
        let rotated = similarity_rescue(m, attempt);
        if let Some(schur) = rotated.try_schur(f64::EPSILON, iterations) {
            return Ok(extract(schur));
        }
    }
    Err(decomposition_failure(kind, m))
}

impl Field for f64 {
    const NAME: &'static str = "real";

    fn from_re(x: f64) -> Self {
        x
    }

    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> Self {
        rng.sample(StandardNormal)
    }

    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<C64>> {
        if m.nrows() == 1 {
            return Ok(vec![C64::new(m[(0, 0)], 0.0)]);
        }
        schur_with_rescue(
            m,
            |schur| schur.complex_eigenvalues().iter().copied().collect(),
            "real Schur reduction",
        )
    }

    fn entry_to_json(self) -> serde_json::Value {
        serde_json::json!(self)
    }

    fn entry_from_json(v: &serde_json::Value) -> Result<Self> {
        v.as_f64()
            .ok_or_else(|| Error::Domain(format!("expected a real entry, got {v}")))
    }
}

impl Field for C64 {
    const NAME: &'static str = "complex";

    fn from_re(x: f64) -> Self {
        C64::new(x, 0.0)
    }

    fn to_c64(self) -> C64 {
        self
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> Self {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<C64>> {
        if m.nrows() == 1 {
            return Ok(vec![m[(0, 0)]]);
        }
        // The complex Schur form is genuinely triangular; eigenvalues sit on
        // its diagonal.
        schur_with_rescue(
            m,
            |schur| {
                let (_, t) = schur.unpack();
                (0..t.nrows()).map(|i| t[(i, i)]).collect()
            },
            "complex Schur reduction",
        )
    }

    fn entry_to_json(self) -> serde_json::Value {
        serde_json::json!([self.re, self.im])
    }

    fn entry_from_json(v: &serde_json::Value) -> Result<Self> {
        let pair = v
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| Error::Domain(format!("expected a [re, im] entry, got {v}")))?;
        let re = pair[0]
            .as_f64()
            .ok_or_else(|| Error::Domain("non-numeric real part".into()))?;
        let im = pair[1]
            .as_f64()
            .ok_or_else(|| Error::Domain("non-numeric imaginary part".into()))?;
        Ok(C64::new(re, im))
    }
}
