//! Sphere log-integrals and their coset reductions.
//!
//! The central object is ∫ log(Σ aᵢuᵢ²) dσ over the unit sphere, which is
//! nonnegative for positive weights of product one and vanishes only at
//! a = (1, …, 1). The coset integral ∫∫ log‖A X u‖ reduces to half of it with
//! the squared singular values of A as weights.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::Field;
use crate::linalg::{self, SingularSpectrum};
use crate::matrix::SquareMatrix;
use crate::quad;
use crate::sampling::{self, SeededStream};
use crate::stats::{BatchAccumulator, MonteCarloEstimate};
use crate::tolerances;

/// Strictly positive integrand weights (a₁, …, aₙ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("weight vector must be nonempty".into()));
        }
        if weights.iter().any(|&a| !a.is_finite() || a <= 0.0) {
            return Err(Error::Domain(format!(
                "weights must be strictly positive and finite, got {weights:?}"
            )));
        }
        Ok(Self { weights })
    }

    /// Squared singular values of a matrix, the reduced-integral weights.
    pub fn from_spectrum_squares(spectrum: &SingularSpectrum) -> Result<Self> {
        Self::new(spectrum.squares())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn product(&self) -> f64 {
        self.weights.iter().product()
    }

    /// Πaᵢ = 1 within the central tolerance.
    pub fn is_sl_normalized(&self) -> bool {
        (self.product() - 1.0).abs() <= tolerances::WEIGHT_PRODUCT_TOL
    }

    /// max |log aᵢ|.
    pub fn log_distance(&self) -> f64 {
        self.weights
            .iter()
            .map(|a| a.ln().abs())
            .fold(0.0, f64::max)
    }
}

/// log(Σ aᵢuᵢ²) at the direction of the raw Gaussian vector g, evaluated as
/// the ratio Σaᵢgᵢ² / Σgᵢ² so that normalization costs no accuracy. For
/// a = (1, …, 1) numerator and denominator are the same float computation and
/// the integrand is exactly zero. Near-zero weights make the value
/// large-negative but integrable; no clamping, clamping would bias the mean.
fn evaluate_sphere_integrand(weights: &[f64], g: &DVector<f64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, x) in weights.iter().zip(g.iter()) {
        let sq = x * x;
        num += a * sq;
        den += sq;
    }
    (num / den).ln()
}

fn run_estimate(
    n_samples: usize,
    stream: &mut SeededStream,
    integrand: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
) -> MonteCarloEstimate {
    let base = stream.reserve(n_samples);
    let snapshot = *stream;
    let batches = exec::map_batches(n_samples, |lo, hi| {
        let mut acc = BatchAccumulator::new();
        for i in lo..hi {
            let mut rng = snapshot.rng_at(base + i as u64);
            acc.push(integrand(&mut rng));
        }
        acc
    });
    let total = exec::tree_combine(batches, BatchAccumulator::merge).expect("n_samples >= 1");
    MonteCarloEstimate::from_accumulator(&total, snapshot.seed())
}

/// Monte Carlo estimate of ∫ log(Σ aᵢuᵢ²) dσ with uniform sphere samples.
pub fn sphere_log_integral(
    a: &WeightVector,
    n_samples: usize,
    stream: &mut SeededStream,
) -> Result<MonteCarloEstimate> {
    require_samples(n_samples)?;
    let n = a.dim();
    let weights = a.weights().to_vec();
    Ok(run_estimate(n_samples, stream, move |rng| {
        let g = sampling::sphere_raw_with(n, rng);
        evaluate_sphere_integrand(&weights, &g)
    }))
}

/// Pointwise weighted AM-GM lower bound Σ uᵢ² log aᵢ for the integrand.
pub fn amgm_lower_bound(a: &WeightVector, u: &[f64]) -> Result<f64> {
    if u.len() != a.dim() {
        return Err(Error::Domain(format!(
            "direction has {} entries for {} weights",
            u.len(),
            a.dim()
        )));
    }
    let norm_sq: f64 = u.iter().map(|x| x * x).sum();
    if (norm_sq.sqrt() - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "direction must be unit length, got |u| = {}",
            norm_sq.sqrt()
        )));
    }
    Ok(a.weights()
        .iter()
        .zip(u)
        .map(|(ai, ui)| ui * ui * ai.ln())
        .sum())
}

/// Two-level coset estimate plus the smallest log ρ(AX) seen among its
/// matrix draws (everywhere ≥ 0 when |det A| = 1).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CosetEstimate {
    pub estimate: MonteCarloEstimate,
    pub min_log_spectral_radius: f64,
}

/// Direct two-level Monte Carlo of ⨍ dX ∫ log‖A X u‖ dσ: a Haar X and a
/// sphere point per sample.
pub fn coset_log_norm_integral<T: Field>(
    a: &SquareMatrix<T>,
    n_samples: usize,
    stream: &mut SeededStream,
) -> Result<CosetEstimate> {
    require_samples(n_samples)?;
    let det = a.determinant().to_c64().norm();
    if det < tolerances::SINGULAR_TOL {
        return Err(Error::SingularMatrix { det_abs: det });
    }
    let n = a.dim();
    let base = stream.reserve(n_samples);
    let snapshot = *stream;
    let inner = a.inner().clone();

    let batches = exec::map_batches(n_samples, |lo, hi| {
        let mut acc = BatchAccumulator::new();
        let mut min_log_rho = f64::INFINITY;
        for i in lo..hi {
            let mut rng = snapshot.rng_at(base + i as u64);
            let x = sampling::haar_from_rng::<T>(n, &mut rng);
            let b = &inner * x;
            let u = sampling::sphere_from_rng(n, &mut rng);
            let bu = &b * DVector::from_fn(n, |k, _| T::from_re(u[k]));
            acc.push(bu.norm().ln());
            // A decomposition failure here would be pathological; surface it
            // as -inf so positivity audits trip rather than pass silently.
            let log_rho = T::eigenvalues(&b)
                .map(|eigs| eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).ln())
                .unwrap_or(f64::NEG_INFINITY);
            min_log_rho = min_log_rho.min(log_rho);
        }
        (acc, min_log_rho)
    });
    let (total, min_log_rho) = exec::tree_combine(batches, |(a1, m1), (a2, m2)| {
        (a1.merge(a2), m1.min(m2))
    })
    .expect("n_samples >= 1");
    Ok(CosetEstimate {
        estimate: MonteCarloEstimate::from_accumulator(&total, snapshot.seed()),
        min_log_spectral_radius: min_log_rho,
    })
}

/// One-level estimator ½ ∫ log(Σ σᵢ²(A) uᵢ²) dσ; same value as the two-level
/// coset integral with lower variance.
pub fn reduced_coset_integral<T: Field>(
    a: &SquareMatrix<T>,
    n_samples: usize,
    stream: &mut SeededStream,
) -> Result<MonteCarloEstimate> {
    let det = a.determinant().to_c64().norm();
    if det < tolerances::SINGULAR_TOL {
        return Err(Error::SingularMatrix { det_abs: det });
    }
    let spectrum = linalg::singular_values(a)?;
    let weights = WeightVector::from_spectrum_squares(&spectrum)?;
    Ok(sphere_log_integral(&weights, n_samples, stream)?.halved())
}

/// Outcome of the sign-certification escalation policy.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SignCertificate {
    /// Mean cleared five standard errors at some sample size.
    MonteCarlo { estimate: MonteCarloEstimate },
    /// Monte Carlo never resolved; the deterministic rule certified the sign.
    Quadrature { value: f64 },
    /// Neither route resolved the sign under the cap.
    Indeterminate { last: MonteCarloEstimate },
}

/// Drive the sample count (doubling, capped) until positivity resolves at
/// 5 standard errors, falling back to quadrature for n ≤ 3.
pub fn certify_sphere_integral_positive(
    a: &WeightVector,
    start_samples: usize,
    cap: usize,
    stream: &mut SeededStream,
) -> Result<SignCertificate> {
    let mut n = start_samples.max(2);
    let mut last = None;
    while n <= cap {
        let est = sphere_log_integral(a, n, stream)?;
        if est.positive_at(5.0) {
            return Ok(SignCertificate::MonteCarlo { estimate: est });
        }
        last = Some(est);
        n *= 2;
    }
    if a.dim() <= 3 {
        let value = quad::sphere_log_integral_quadrature(a.weights(), 1)?;
        if value > 1e-10 {
            return Ok(SignCertificate::Quadrature { value });
        }
    }
    Ok(SignCertificate::Indeterminate {
        last: last.expect("at least one estimate"),
    })
}

fn require_samples(n_samples: usize) -> Result<()> {
    if n_samples >= 2 {
        Ok(())
    } else {
        Err(Error::Domain("n_samples must be >= 2".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_weights_give_exact_zero() {
        let a = WeightVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let mut stream = SeededStream::new(1);
        let est = sphere_log_integral(&a, 1000, &mut stream).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn two_dim_closed_form() {
        // ∫ log(4u₁² + u₂²/4) dσ = 2 log(1.25)
        let a = WeightVector::new(vec![4.0, 0.25]).unwrap();
        let exact = 2.0 * 1.25f64.ln();
        let quad_value = quad::sphere_log_integral_quadrature(a.weights(), 0).unwrap();
        assert!((quad_value - exact).abs() < 1e-12);

        let mut stream = SeededStream::new(2);
        let est = sphere_log_integral(&a, 200_000, &mut stream).unwrap();
        assert!(
            (est.mean - exact).abs() < 3.0 * est.std_error,
            "mean {} vs {exact}, se {}",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn three_dim_positive_at_five_se() {
        let e2 = std::f64::consts::E.powi(2);
        let a = WeightVector::new(vec![e2, 1.0, 1.0 / e2]).unwrap();
        assert!(a.is_sl_normalized());
        let mut stream = SeededStream::new(3);
        let est = sphere_log_integral(&a, 200_000, &mut stream).unwrap();
        assert!(est.positive_at(5.0));
        let quad_value = quad::sphere_log_integral_quadrature(a.weights(), 0).unwrap();
        assert!((est.mean - quad_value).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn amgm_examples() {
        let ones = WeightVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let u = [0.6, 0.8, 0.0];
        assert_eq!(amgm_lower_bound(&ones, &u).unwrap(), 0.0);

        let a = WeightVector::new(vec![4.0, 0.25]).unwrap();
        let bound = amgm_lower_bound(&a, &[1.0, 0.0]).unwrap();
        assert!((bound - 4.0f64.ln()).abs() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bound = amgm_lower_bound(&a, &[s, s]).unwrap();
        assert!(bound.abs() < 1e-15);
        // ... and the integrand at that direction is log(2.125) > 0.
        let value = (4.0 * s * s + 0.25 * s * s).ln();
        assert!(value >= bound);
        assert!((value - 2.125f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn coset_orthogonal_is_zero() {
        let x = SquareMatrix::rotation2(0.9);
        let mut stream = SeededStream::new(4);
        let out = coset_log_norm_integral(&x, 2_000, &mut stream).unwrap();
        assert!(out.estimate.mean.abs() < 1e-12);
        assert!(out.min_log_spectral_radius >= tolerances::LOCALIZED_FLOOR);
    }

    #[test]
    fn coset_matches_reduced_for_diag() {
        let a = SquareMatrix::<f64>::diagonal(&[2.0, 0.5]);
        let exact = 1.25f64.ln();
        let mut stream = SeededStream::new(5);
        let two_level = coset_log_norm_integral(&a, 100_000, &mut stream).unwrap();
        assert!(
            (two_level.estimate.mean - exact).abs() < 3.0 * two_level.estimate.std_error,
            "two-level {} vs {exact}",
            two_level.estimate.mean
        );
        let mut stream2 = SeededStream::new(6);
        let reduced = reduced_coset_integral(&a, 100_000, &mut stream2).unwrap();
        let combined = two_level.estimate.combined_std_error(&reduced);
        assert!((two_level.estimate.mean - reduced.mean).abs() <= 3.0 * combined);
    }

    #[test]
    fn coset_matches_reduced_for_random_sl4() {
        let mut gen = SeededStream::new(44);
        let a = loop {
            let mut rng = gen.next_rng();
            let mut g =
                nalgebra::DMatrix::from_fn(4, 4, |_, _| <f64 as crate::field::Field>::gaussian(&mut rng));
            if g.determinant().abs() < 1e-6 {
                continue;
            }
            if g.determinant() < 0.0 {
                for j in 0..4 {
                    g[(0, j)] = -g[(0, j)];
                }
            }
            break linalg::normalize_to_sl(&SquareMatrix::from_inner(g).unwrap()).unwrap();
        };
        let mut s1 = SeededStream::new(45);
        let mut s2 = SeededStream::new(46);
        let two_level = coset_log_norm_integral(&a, 30_000, &mut s1).unwrap();
        let reduced = reduced_coset_integral(&a, 30_000, &mut s2).unwrap();
        let combined = two_level.estimate.combined_std_error(&reduced);
        assert!((two_level.estimate.mean - reduced.mean).abs() <= 3.0 * combined);
        assert!(two_level.min_log_spectral_radius >= tolerances::LOCALIZED_FLOOR);
    }

    #[test]
    fn reduced_is_orthogonally_invariant_with_same_seed() {
        let a = SquareMatrix::<f64>::diagonal(&[2.0, 1.0, 0.5]);
        let mut s0 = SeededStream::new(77);
        let p = sampling::sample_haar_orthogonal(3, &mut s0).unwrap();
        let ap = a.mul(&p);

        let mut s1 = SeededStream::new(9);
        let mut s2 = SeededStream::new(9);
        let e1 = reduced_coset_integral(&a, 10_000, &mut s1).unwrap();
        let e2 = reduced_coset_integral(&ap, 10_000, &mut s2).unwrap();
        // Identical sphere draws; the only daylight is the ulp-level drift of
        // the computed singular values of A·P versus A.
        assert!((e1.mean - e2.mean).abs() < 1e-12);
        assert!((e1.std_error - e2.std_error).abs() < 1e-12);
    }

    #[test]
    fn certification_short_circuits_on_clear_positivity() {
        let a = WeightVector::new(vec![4.0, 0.25]).unwrap();
        let mut stream = SeededStream::new(10);
        match certify_sphere_integral_positive(&a, 1_000, 100_000, &mut stream).unwrap() {
            SignCertificate::MonteCarlo { estimate } => assert!(estimate.positive_at(5.0)),
            other => panic!("expected Monte Carlo certification, got {other:?}"),
        }
    }

    #[test]
    fn positivity_drive_resolves_near_identity_weights() {
        // Weights close to (1,1,1): the mean is small, so the drive escalates
        // until 5 standard errors resolve the sign (or quadrature certifies).
        let a = WeightVector::new(vec![1.1, 1.0, 1.0 / 1.1]).unwrap();
        let mut stream = SeededStream::new(12);
        match certify_sphere_integral_positive(
            &a,
            10_000,
            tolerances::ESCALATION_CAP,
            &mut stream,
        )
        .unwrap()
        {
            SignCertificate::MonteCarlo { estimate } => assert!(estimate.positive_at(5.0)),
            SignCertificate::Quadrature { value } => assert!(value > 0.0),
            SignCertificate::Indeterminate { last } => {
                panic!("positivity should resolve, got mean {}", last.mean)
            }
        }
    }

    #[test]
    fn certification_falls_back_to_quadrature_near_identity() {
        // Tiny perturbation: mean ~ 1e-8 can't clear 5 SE at the cap, but the
        // quadrature value is positive.
        let eps = 1e-4f64;
        let a = WeightVector::new(vec![(eps).exp(), (-eps).exp()]).unwrap();
        let mut stream = SeededStream::new(11);
        match certify_sphere_integral_positive(&a, 64, 256, &mut stream).unwrap() {
            SignCertificate::Quadrature { value } => assert!(value > 0.0),
            other => panic!("expected quadrature fallback, got {other:?}"),
        }
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![1.0, -2.0]).is_err());
        let a = WeightVector::new(vec![4.0, 1.0, 0.25]).unwrap();
        assert!(a.is_sl_normalized());
        assert!((a.log_distance() - 4.0f64.ln()).abs() < 1e-15);
    }
}
