//! Reproducible Haar sampling on O(n), SO(n), U(n), the unit sphere, and
//! bi-invariant measures on SL(n).
//!
//! Sample i of a stream is a pure function of (seed, i): each index owns a
//! ChaCha stream, so concurrent consumers can partition index ranges without
//! affecting what any sample looks like.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::matrix::SquareMatrix;

/// A seeded sample counter. The pair (seed, index) fully determines a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededStream {
    seed: u64,
    index: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, index: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// RNG owning sample `i`, independent of the stream's cursor.
    pub fn rng_at(&self, i: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i);
        rng
    }

    /// RNG for the next sample, advancing the cursor.
    pub fn next_rng(&mut self) -> ChaCha8Rng {
        let rng = self.rng_at(self.index);
        self.index += 1;
        rng
    }

    /// Reserve `count` consecutive indices, returning the first.
    pub fn reserve(&mut self, count: usize) -> u64 {
        let base = self.index;
        self.index += count as u64;
        base
    }

    /// Independent stream derived from this seed and a tag; used when an
    /// experiment needs statistically unrelated sample sequences.
    pub fn substream(&self, tag: u64) -> SeededStream {
        SeededStream::new(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(1))))
    }
}

/// Compact group to integrate over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "O")]
    Orthogonal,
    #[serde(rename = "SO")]
    SpecialOrthogonal,
    #[serde(rename = "U")]
    Unitary,
}

impl Group {
    pub fn label(&self) -> &'static str {
        match self {
            Group::Orthogonal => "O",
            Group::SpecialOrthogonal => "SO",
            Group::Unitary => "U",
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" | "o" => Ok(Group::Orthogonal),
            "SO" | "so" => Ok(Group::SpecialOrthogonal),
            "U" | "u" => Ok(Group::Unitary),
            other => Err(Error::Config(format!(
                "unknown group {other:?} (expected O, SO, or U)"
            ))),
        }
    }
}

/// Gaussian matrix, QR, then column phase correction by diag(rᵢᵢ/|rᵢᵢ|).
///
/// Without the correction the law is not Haar: plain QR biases the diagonal
/// of Q toward positive values.
pub fn haar_from_rng<T: Field>(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    loop {
        let g = DMatrix::from_fn(n, n, |_, _| T::gaussian(rng));
        let qr = g.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)].modulus() < 1e-300) {
            continue; // essentially impossible; retry within the same stream
        }
        let mut q = qr.q();
        for j in 0..n {
            let d = r[(j, j)];
            let phase = d * T::from_re(1.0 / d.modulus());
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
        return q;
    }
}

/// Nonzero Gaussian vector; its direction is uniform on the sphere.
pub(crate) fn sphere_raw_with(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(n, |_, _| f64::gaussian(rng));
        if g.norm() > 1e-12 {
            return g;
        }
    }
}

pub fn sphere_from_rng(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let g = sphere_raw_with(n, rng);
    let norm = g.norm();
    g / norm
}

pub(crate) fn group_matrix_real(group: Group, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut x = haar_from_rng::<f64>(n, rng);
    if group == Group::SpecialOrthogonal && x.determinant() < 0.0 {
        // Right-translation by diag(-1, 1, .., 1) maps the det = -1 component
        // onto SO(n) and preserves Haar measure.
        for i in 0..n {
            x[(i, 0)] = -x[(i, 0)];
        }
    }
    x
}

/// Haar-distributed X ∈ O(n); both determinant components occur with
/// probability 1/2.
pub fn sample_haar_orthogonal(n: usize, stream: &mut SeededStream) -> Result<SquareMatrix<f64>> {
    require_dim(n)?;
    SquareMatrix::from_inner(haar_from_rng::<f64>(n, &mut stream.next_rng()))
}

/// Haar-distributed X ∈ SO(n).
pub fn sample_haar_special_orthogonal(
    n: usize,
    stream: &mut SeededStream,
) -> Result<SquareMatrix<f64>> {
    require_dim(n)?;
    SquareMatrix::from_inner(group_matrix_real(
        Group::SpecialOrthogonal,
        n,
        &mut stream.next_rng(),
    ))
}

/// Haar-distributed X ∈ U(n).
pub fn sample_haar_unitary(n: usize, stream: &mut SeededStream) -> Result<SquareMatrix<C64>> {
    require_dim(n)?;
    SquareMatrix::from_inner(haar_from_rng::<C64>(n, &mut stream.next_rng()))
}

/// Uniform point on the unit sphere S^{n-1} ⊂ ℝⁿ.
pub fn sample_sphere(n: usize, stream: &mut SeededStream) -> Result<DVector<f64>> {
    require_dim(n)?;
    Ok(sphere_from_rng(n, &mut stream.next_rng()))
}

fn require_dim(n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::Domain("dimension must be >= 1".into()))
    }
}

/// Law of the singular spectrum for bi-invariant sampling on SL(n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SingularLaw {
    /// Every sample has exactly this spectrum.
    Fixed { spectrum: Vec<f64> },
    /// Exponents uniform on [-L, L]ⁿ, projected to zero sum, then exponentiated.
    LogUniform { half_width: f64 },
}

/// Descriptor of an orthogonally bi-invariant measure on SL(n, ℝ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantMeasureSpec {
    pub dim: usize,
    pub singular_law: SingularLaw,
}

impl InvariantMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        require_dim(self.dim)?;
        match &self.singular_law {
            SingularLaw::Fixed { spectrum } => {
                if spectrum.len() != self.dim {
                    return Err(Error::Config(format!(
                        "fixed spectrum has {} entries for dim {}",
                        spectrum.len(),
                        self.dim
                    )));
                }
                if spectrum.iter().any(|&s| !s.is_finite() || s <= 0.0) {
                    return Err(Error::Config("fixed spectrum entries must be > 0".into()));
                }
                let product: f64 = spectrum.iter().product();
                if (product - 1.0).abs() > 1e-8 {
                    return Err(Error::Config(format!(
                        "fixed spectrum product {product} is not 1 (not special-linear)"
                    )));
                }
                Ok(())
            }
            SingularLaw::LogUniform { half_width } => {
                if *half_width > 0.0 && half_width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "log-uniform half-width {half_width} must be positive and finite"
                    )))
                }
            }
        }
    }

    pub(crate) fn draw_spectrum(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.singular_law {
            SingularLaw::Fixed { spectrum } => {
                let mut s = spectrum.clone();
                s.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
                s
            }
            SingularLaw::LogUniform { half_width } => {
                let l = *half_width;
                let mut e: Vec<f64> = (0..self.dim)
                    .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * l)
                    .collect();
                let mean = e.iter().sum::<f64>() / e.len() as f64;
                for x in &mut e {
                    *x -= mean;
                }
                e.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
                e.into_iter().map(f64::exp).collect()
            }
        }
    }
}

pub(crate) fn invariant_sl_with(
    spec: &InvariantMeasureSpec,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let n = spec.dim;
    let mut x1 = haar_from_rng::<f64>(n, rng);
    let x2 = haar_from_rng::<f64>(n, rng);
    let spectrum = spec.draw_spectrum(rng);
    // Haar factors have det ±1; fold the sign into x1 so the product lands in
    // SL(n). diag(-1, 1, ..) commutes with the diagonal factor, so the
    // singular spectrum is untouched.
    if x1.determinant() * x2.determinant() < 0.0 {
        for i in 0..n {
            x1[(i, 0)] = -x1[(i, 0)];
        }
    }
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { spectrum[i] } else { 0.0 });
    x1 * d * x2
}

/// X₁ · diag(σ) · X₂ with X₁, X₂ independent Haar and σ from the law; the
/// result is bi-orthogonally invariant and special-linear.
pub fn sample_invariant_sl(
    spec: &InvariantMeasureSpec,
    stream: &mut SeededStream,
) -> Result<SquareMatrix<f64>> {
    spec.validate()?;
    SquareMatrix::from_inner(invariant_sl_with(spec, &mut stream.next_rng()))
}
