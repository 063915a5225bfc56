//! Dense linear-algebra primitives: singular values, spectral radius, operator
//! norm, determinant-one normalization, and the exponential diagonal family.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::matrix::SquareMatrix;
use crate::tolerances;

/// Nonincreasing, nonnegative singular values σ₁ ≥ … ≥ σₙ ≥ 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    fn from_sorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest singular value, the operator norm of the source matrix.
    pub fn sigma1(&self) -> f64 {
        self.values[0]
    }

    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }

    /// L(A) = maxᵢ |log σᵢ(A)|, the log-scale distance from the identity coset.
    pub fn log_distance(&self) -> f64 {
        self.values
            .iter()
            .map(|s| s.ln().abs())
            .fold(0.0, f64::max)
    }

    /// Squared singular values, the weights of the reduced sphere integral.
    pub fn squares(&self) -> Vec<f64> {
        self.values.iter().map(|s| s * s).collect()
    }
}

fn svd_iterations(dim: usize) -> usize {
    (100 * dim).max(1_000)
}

/// Singular values of any square matrix: nonnegative square roots of the
/// eigenvalues of AᴴA, sorted nonincreasing.
pub fn singular_values<T: Field>(a: &SquareMatrix<T>) -> Result<SingularSpectrum> {
    let svd = a
        .inner()
        .clone()
        .try_svd(false, false, f64::EPSILON, svd_iterations(a.dim()))
        .ok_or_else(|| Error::Decomposition {
            kind: "singular value decomposition",
            dim: a.dim(),
            max_abs: a.max_abs(),
        })?;
    Ok(SingularSpectrum::from_sorted(
        svd.singular_values.iter().copied().collect(),
    ))
}

/// Operator norm ‖A‖ = σ₁(A).
pub fn operator_norm<T: Field>(a: &SquareMatrix<T>) -> Result<f64> {
    Ok(singular_values(a)?.sigma1())
}

/// All eigenvalues, as complex numbers regardless of the field.
pub fn eigenvalues<T: Field>(a: &SquareMatrix<T>) -> Result<Vec<C64>> {
    T::eigenvalues(a.inner())
}

/// Spectral radius ρ(A) = max |λ|.
pub fn spectral_radius<T: Field>(a: &SquareMatrix<T>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

trait DetScale: Field {
    /// Scale factor s with sⁿ = det, subject to the field's orientation rules.
    fn det_root(det: Self, n: usize) -> Result<Self>;
}

impl DetScale for f64 {
    fn det_root(det: f64, n: usize) -> Result<f64> {
        if det.abs() < tolerances::SINGULAR_TOL {
            return Err(Error::SingularMatrix { det_abs: det.abs() });
        }
        if det < 0.0 {
            return Err(Error::NegativeOrientation { det });
        }
        Ok(det.powf(1.0 / n as f64))
    }
}

impl DetScale for C64 {
    fn det_root(det: C64, n: usize) -> Result<C64> {
        if det.norm() < tolerances::SINGULAR_TOL {
            return Err(Error::SingularMatrix {
                det_abs: det.norm(),
            });
        }
        Ok(det.powf(1.0 / n as f64))
    }
}

fn normalize_to_sl_impl<T: DetScale>(a: &SquareMatrix<T>) -> Result<SquareMatrix<T>> {
    let scale = T::det_root(a.determinant(), a.dim())?;
    let inv = T::one() / scale;
    SquareMatrix::from_inner(a.inner().map(|x| x * inv))
}

/// A / (det A)^{1/n}, which has determinant one. Real inputs must have det > 0.
pub fn normalize_to_sl(a: &SquareMatrix<f64>) -> Result<SquareMatrix<f64>> {
    normalize_to_sl_impl(a)
}

/// Complex variant of [`normalize_to_sl`], using the principal n-th root.
pub fn normalize_to_sl_complex(a: &SquareMatrix<C64>) -> Result<SquareMatrix<C64>> {
    normalize_to_sl_impl(a)
}

/// Full factorization A = P₁ · diag(Σ) · P₂ with P₁, P₂ orthogonal (unitary).
pub fn svd_factors<T: Field>(
    a: &SquareMatrix<T>,
) -> Result<(SquareMatrix<T>, SingularSpectrum, SquareMatrix<T>)> {
    let n = a.dim();
    let svd = a
        .inner()
        .clone()
        .try_svd(true, true, f64::EPSILON, svd_iterations(n))
        .ok_or_else(|| Error::Decomposition {
            kind: "singular value decomposition",
            dim: n,
            max_abs: a.max_abs(),
        })?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let raw: Vec<f64> = svd.singular_values.iter().copied().collect();

    // Sort descending, permuting U's columns and V^H's rows in step.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).expect("finite"));
    let sorted: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let p1 = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    let p2 = DMatrix::from_fn(n, n, |i, j| v_t[(order[i], j)]);

    Ok((
        SquareMatrix::from_inner(p1)?,
        SingularSpectrum { values: sorted },
        SquareMatrix::from_inner(p2)?,
    ))
}

/// Exponent vector (d₁ ≥ … ≥ dₙ) parameterizing the diagonal family
/// diag(e^{d₁t}, …, e^{dₙt}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSpec {
    exponents: Vec<f64>,
    scale: Option<f64>,
}

impl DiagonalSpec {
    pub fn new(exponents: Vec<f64>, scale: Option<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::Domain("empty exponent vector".into()));
        }
        if exponents.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(
                "exponents must be nonincreasing (d1 >= ... >= dn)".into(),
            ));
        }
        if let Some(t) = scale {
            if t < 0.0 || t.is_nan() {
                return Err(Error::Domain(format!("scale t = {t} must be >= 0")));
            }
        }
        Ok(Self { exponents, scale })
    }

    /// Project onto Σdᵢ = 0, rescale so max(|d₁|, |dₙ|) = 1, and sort.
    pub fn traceless_normalized(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Domain("empty exponent vector".into()));
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let mut d: Vec<f64> = raw.iter().map(|x| x - mean).collect();
        d.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let head = d[0].abs().max(d[d.len() - 1].abs());
        if head < 1e-15 {
            return Err(Error::Domain(
                "exponent vector is numerically zero after projection".into(),
            ));
        }
        for x in &mut d {
            *x /= head;
        }
        Ok(Self {
            exponents: d,
            scale: None,
        })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn d1(&self) -> f64 {
        self.exponents[0]
    }

    pub fn is_traceless(&self) -> bool {
        self.exponents.iter().sum::<f64>().abs() <= tolerances::TRACELESS_TOL
    }

    pub fn is_normalized(&self) -> bool {
        let head = self.exponents[0]
            .abs()
            .max(self.exponents[self.exponents.len() - 1].abs());
        (head - 1.0).abs() <= tolerances::EXPONENT_NORMALIZED_TOL
    }

    /// diag(e^{d₁t}, …, e^{dₙt}).
    pub fn matrix(&self, t: f64) -> SquareMatrix<f64> {
        let entries: Vec<f64> = self.exponents.iter().map(|d| (d * t).exp()).collect();
        SquareMatrix::diagonal(&entries)
    }

    /// log σ₁ of `matrix(t)`, exactly t·d₁ in this parameterization.
    pub fn log_sigma1(&self, t: f64) -> f64 {
        t * self.d1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_identity() {
        let spectrum = singular_values(&SquareMatrix::<f64>::identity(4)).unwrap();
        for &s in spectrum.values() {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_values_diagonal() {
        let spectrum = singular_values(&SquareMatrix::<f64>::diagonal(&[3.0, 1.0 / 3.0])).unwrap();
        assert!((spectrum.values()[0] - 3.0).abs() < 1e-14);
        assert!((spectrum.values()[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_offdiagonal() {
        // AᵀA = diag(1/4, 4) by hand, so Σ = (2, 1/2).
        let a = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![-0.5, 0.0]]).unwrap();
        let spectrum = singular_values(&a).unwrap();
        assert!((spectrum.values()[0] - 2.0).abs() < 1e-14);
        assert!((spectrum.values()[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_cases() {
        assert!((spectral_radius(&SquareMatrix::<f64>::identity(3)).unwrap() - 1.0).abs() < 1e-14);
        // diag(2, 1/2) · R_{π/2}: trace 0, det 1, eigenvalues ±i.
        let a = SquareMatrix::<f64>::diagonal(&[2.0, 0.5])
            .mul(&SquareMatrix::rotation2(std::f64::consts::FRAC_PI_2));
        assert!((spectral_radius(&a).unwrap() - 1.0).abs() < 1e-12);
        let tri = SquareMatrix::from_rows(&[vec![4.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!((spectral_radius(&tri).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_cases() {
        assert!((operator_norm(&SquareMatrix::<f64>::identity(5)).unwrap() - 1.0).abs() < 1e-14);
        let d = SquareMatrix::<f64>::diagonal(&[5.0, 0.2]);
        assert!((operator_norm(&d).unwrap() - 5.0).abs() < 1e-14);
        let r = SquareMatrix::rotation2(1.2345);
        assert!((operator_norm(&r).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalize_to_sl_cases() {
        let m = normalize_to_sl(&SquareMatrix::<f64>::diagonal(&[2.0, 2.0])).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-15);

        let three_i = SquareMatrix::<f64>::diagonal(&[3.0, 3.0, 3.0]);
        let m = normalize_to_sl(&three_i).unwrap();
        assert!((m.get(1, 1) - 1.0).abs() < 1e-15);

        // det = 8, cube root 2.
        let m = normalize_to_sl(&SquareMatrix::<f64>::diagonal(&[8.0, 1.0, 1.0])).unwrap();
        assert!((m.get(0, 0) - 4.0).abs() < 1e-12);
        assert!((m.get(1, 1) - 0.5).abs() < 1e-12);

        assert!(matches!(
            normalize_to_sl(&SquareMatrix::<f64>::diagonal(&[1.0, 0.0])),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            normalize_to_sl(&SquareMatrix::<f64>::diagonal(&[-1.0, 1.0])),
            Err(Error::NegativeOrientation { .. })
        ));
    }

    #[test]
    fn svd_factors_reconstruct() {
        let a = SquareMatrix::from_rows(&[
            vec![0.3, -1.2, 0.7],
            vec![2.0, 0.1, -0.4],
            vec![-0.9, 0.5, 1.1],
        ])
        .unwrap();
        let (p1, s, p2) = svd_factors(&a).unwrap();
        assert!(p1.orthogonality_residual() < 1e-12);
        assert!(p2.orthogonality_residual() < 1e-12);
        assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        let recon = p1.mul(&SquareMatrix::diagonal(s.values())).mul(&p2);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((recon.get(i, j) - a.get(i, j)).abs());
            }
        }
        assert!(worst <= tolerances::SVD_RECONSTRUCTION_REL_TOL * s.sigma1());
    }

    #[test]
    fn diagonal_spec_validation() {
        assert!(DiagonalSpec::new(vec![1.0, 0.0, -1.0], None).is_ok());
        assert!(DiagonalSpec::new(vec![0.0, 1.0], None).is_err());
        let d = DiagonalSpec::traceless_normalized(&[2.0, 0.5, 0.5]).unwrap();
        assert!(d.is_traceless());
        assert!(d.is_normalized());
        assert_eq!(d.d1(), 1.0);
        let m = d.matrix(0.7);
        assert!((m.special_linear_deviation()) < 1e-12);
        assert!((singular_values(&m).unwrap().sigma1().ln() - d.log_sigma1(0.7)).abs() < 1e-12);
    }

    #[test]
    fn log_distance_matches_definition() {
        let s = singular_values(&SquareMatrix::<f64>::diagonal(&[4.0, 1.0, 0.25])).unwrap();
        assert!((s.log_distance() - 4.0f64.ln()).abs() < 1e-12);
    }
}
