//! Eigenvalue localization and first-order perturbation machinery: Gershgorin
//! disks, the spectral-radius bracket for diag(d)·(I + tM), Kato derivatives
//! of simple eigenvalues, and the near-identity rotation constructions with
//! their derivative floor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eigen::{self, EigenPair, EigenSelect};
use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::linalg::{self, DiagonalSpec};
use crate::matrix::SquareMatrix;
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiskVariant {
    Row,
    Column,
}

/// Gershgorin disk: center aᵢᵢ, radius the off-diagonal absolute row or
/// column sum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GershgorinDisk {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    pub index: usize,
    pub variant: DiskVariant,
}

impl GershgorinDisk {
    pub fn center(&self) -> C64 {
        C64::new(self.center_re, self.center_im)
    }

    /// Signed distance of z outside the disk (≤ 0 means membership).
    pub fn excess(&self, z: C64) -> f64 {
        (z - self.center()).norm() - self.radius
    }
}

/// The n row disks followed by the n column disks.
pub fn gershgorin_disks<T: Field>(a: &SquareMatrix<T>) -> Vec<GershgorinDisk> {
    let n = a.dim();
    let mut disks = Vec::with_capacity(2 * n);
    for variant in [DiskVariant::Row, DiskVariant::Column] {
        for i in 0..n {
            let mut radius = 0.0;
            for j in 0..n {
                if j != i {
                    let entry = match variant {
                        DiskVariant::Row => a.get(i, j),
                        DiskVariant::Column => a.get(j, i),
                    };
                    radius += entry.to_c64().norm();
                }
            }
            let center = a.get(i, i).to_c64();
            disks.push(GershgorinDisk {
                center_re: center.re,
                center_im: center.im,
                radius,
                index: i,
                variant,
            });
        }
    }
    disks
}

/// One eigenvalue with the row and column disks that contain it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContainmentWitness {
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    /// Index of the best row disk and how far the eigenvalue pokes out of it.
    pub row_disk: usize,
    pub row_excess: f64,
    pub column_disk: usize,
    pub column_excess: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub contained: bool,
    pub tolerance: f64,
    pub witnesses: Vec<ContainmentWitness>,
}

/// Check that every eigenvalue lies in the union of the row disks and in the
/// union of the column disks, producing per-eigenvalue witness indices.
pub fn check_eigenvalue_containment<T: Field>(a: &SquareMatrix<T>) -> Result<ContainmentReport> {
    let disks = gershgorin_disks(a);
    let (rows, cols) = disks.split_at(a.dim());
    let eigs = linalg::eigenvalues(a)?;
    let tolerance = tolerances::CONTAINMENT_TOL_REL * (1.0 + linalg::operator_norm(a)?);

    let best = |family: &[GershgorinDisk], z: C64| -> (usize, f64) {
        family
            .iter()
            .map(|d| (d.index, d.excess(z)))
            .min_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
            .expect("n >= 1")
    };

    let mut contained = true;
    let mut witnesses = Vec::with_capacity(eigs.len());
    for z in eigs {
        let (row_disk, row_excess) = best(rows, z);
        let (column_disk, column_excess) = best(cols, z);
        if row_excess > tolerance || column_excess > tolerance {
            contained = false;
        }
        witnesses.push(ContainmentWitness {
            eigenvalue_re: z.re,
            eigenvalue_im: z.im,
            row_disk,
            row_excess,
            column_disk,
            column_excess,
        });
    }
    Ok(ContainmentReport {
        contained,
        tolerance,
        witnesses,
    })
}

/// Theoretical bracket and computed value for ρ(diag(d)·(I + tM)).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RadiusBracket {
    pub lower: f64,
    pub upper: f64,
    pub actual: f64,
}

impl RadiusBracket {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower - slack <= self.actual && self.actual <= self.upper + slack
    }
}

/// Bracket d₁(1 − 2nt) ≤ ρ(A_t) ≤ d₁(1 + 2t) for A_t = diag(d)(I + tM) with
/// max-entry-bounded M and t below the regime limit 1/(2n).
pub fn perturbed_radius_bounds(d: &[f64], m: &SquareMatrix<f64>, t: f64) -> Result<RadiusBracket> {
    let n = d.len();
    if n == 0 || m.dim() != n {
        return Err(Error::Domain(format!(
            "diagonal has {} entries for a {}x{} perturbation",
            n,
            m.dim(),
            m.dim()
        )));
    }
    if d.windows(2).any(|w| w[0] < w[1]) || *d.last().expect("nonempty") <= 0.0 {
        return Err(Error::Domain(
            "need d1 >= ... >= dn > 0 for the bracket".into(),
        ));
    }
    if m.max_abs() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "perturbation entries must satisfy |M_ij| <= 1, got max {}",
            m.max_abs()
        )));
    }
    let limit = 1.0 / (2.0 * n as f64);
    if !(0.0..limit).contains(&t) {
        return Err(Error::OutOfRegime { t, limit });
    }

    let a_t = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        d[i] * (delta + t * m.get(i, j))
    });
    let actual = linalg::spectral_radius(&SquareMatrix::from_inner(a_t)?)?;
    Ok(RadiusBracket {
        lower: d[0] * (1.0 - 2.0 * n as f64 * t),
        upper: d[0] * (1.0 + 2.0 * t),
        actual,
    })
}

/// First-order derivative of a simple eigenvalue of T(x) = T₀ + x·direction
/// at x = 0: tr(direction · P_λ) with the spectral projection
/// P_λ = v wᴴ / (wᴴ v) built from the right and left eigenvectors.
///
/// For normal T₀ the left eigenvector coincides with v and the projection
/// reduces to v vᴴ.
pub fn kato_derivative<T: Field>(
    t0: &SquareMatrix<T>,
    direction: &SquareMatrix<T>,
    pair: &EigenPair,
) -> Result<C64> {
    if direction.dim() != t0.dim() {
        return Err(Error::Domain("direction dimension mismatch".into()));
    }
    pair.require_gap(linalg::operator_norm(t0)?)?;
    let w = eigen::left_eigenvector(t0, pair.value)?;
    let v = &pair.vector;
    let denom = (w.adjoint() * v)[(0, 0)];
    if denom.norm() < 1e-12 {
        return Err(Error::DegenerateEigenvalue {
            gap: pair.gap,
            tol: 1e-12,
        });
    }
    let dir = direction.inner().map(|x| x.to_c64());
    let numer = (w.adjoint() * dir * v)[(0, 0)];
    Ok(numer / denom)
}

/// Central finite difference (λ(h) − λ(−h)) / 2h along T₀ + x·direction,
/// tracking the eigenvalue nearest the unperturbed λ. An independent check
/// of [`kato_derivative`]: it never touches eigenvectors or projections.
pub fn fd_eigenvalue_derivative<T: Field>(
    t0: &SquareMatrix<T>,
    direction: &SquareMatrix<T>,
    lambda0: C64,
    h: f64,
) -> Result<C64> {
    let shifted = |s: f64| -> Result<C64> {
        let m = DMatrix::from_fn(t0.dim(), t0.dim(), |i, j| {
            t0.get(i, j) + direction.get(i, j) * T::from_re(s)
        });
        let eigs = T::eigenvalues(&m)?;
        Ok(eigs
            .into_iter()
            .min_by(|a, b| {
                (a - lambda0)
                    .norm()
                    .partial_cmp(&(b - lambda0).norm())
                    .expect("finite")
            })
            .expect("dim >= 1"))
    };
    let plus = shifted(h)?;
    let minus = shifted(-h)?;
    Ok((plus - minus) / C64::new(2.0 * h, 0.0))
}

/// Derivative of a simple eigenvalue along the exponential diagonal family
/// T(x) = diag(e^{d₁x}, …, e^{dₙx})·T at x = 0: λ · Σ dᵢ|vᵢ|².
///
/// The |vᵢ|² form presumes the spectral projection is v vᴴ, which holds for
/// the normal (orthogonal/unitary) matrices this family is applied to; the
/// logarithmic derivative Σ dᵢ|vᵢ|² is real exactly.
pub fn exp_family_derivative(d: &[f64], pair: &EigenPair) -> Result<C64> {
    if d.len() != pair.vector.len() {
        return Err(Error::Domain(format!(
            "exponent vector has {} entries for a dimension-{} eigenvector",
            d.len(),
            pair.vector.len()
        )));
    }
    let weight: f64 = d
        .iter()
        .zip(pair.vector.iter())
        .map(|(di, vi)| di * vi.norm_sqr())
        .sum();
    Ok(pair.value * C64::new(weight, 0.0))
}

/// The distinguished orthogonal matrix X₀ with its simple eigenpair.
///
/// Odd n: the half-turn about e₁, diag(1, −1, …, −1), with λ₀ = 1 and
/// eigenvector e₁. Even n: the quarter-turn of span(e₁, e₂) fixing the rest,
/// with λ₀ = i and eigenvector (1, i, 0, …)/√2. Both have determinant one.
pub fn construct_x0(n: usize) -> Result<(SquareMatrix<f64>, EigenPair)> {
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "the construction needs n >= 3 (its conclusion fails at n = 2), got {n}"
        )));
    }
    if n % 2 == 1 {
        let mut entries = vec![-1.0; n];
        entries[0] = 1.0;
        let x0 = SquareMatrix::<f64>::diagonal(&entries);
        let vector = DVector::from_fn(n, |i, _| {
            if i == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        // Spectrum {1, -1^(n-1)}: the gap of λ₀ = 1 is 2.
        let pair = EigenPair::from_parts(C64::new(1.0, 0.0), vector, 2.0);
        Ok((x0, pair))
    } else {
        let mut inner = DMatrix::<f64>::identity(n, n);
        inner[(0, 0)] = 0.0;
        inner[(0, 1)] = 1.0;
        inner[(1, 0)] = -1.0;
        inner[(1, 1)] = 0.0;
        let x0 = SquareMatrix::from_inner(inner)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let vector = DVector::from_fn(n, |i, _| match i {
            0 => C64::new(s, 0.0),
            1 => C64::new(0.0, s),
            _ => C64::new(0.0, 0.0),
        });
        // Spectrum {i, -i, 1^(n-2)}: the gap of λ₀ = i is |i - 1| = √2.
        let pair = EigenPair::from_parts(C64::new(0.0, 1.0), vector, std::f64::consts::SQRT_2);
        Ok((x0, pair))
    }
}

/// Numerical derivative of log|λ₀| along diag(e^{td₁}, …, e^{tdₙ})·X₀ at
/// t = 0, with the floor it must clear and the exact value it must match.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DerivativeFloor {
    pub derivative: f64,
    /// d₁ for odd n, (n−2)/(2(n−1))·d₁ for even n.
    pub floor: f64,
    /// d₁ for odd n, (d₁+d₂)/2 for even n.
    pub exact: f64,
}

/// Evaluate the derivative floor inequality for a traceless-normalized
/// exponent vector, recomputing the eigenpair of X₀ numerically so the whole
/// derivative path is exercised.
pub fn local_derivative_inequality(d: &DiagonalSpec) -> Result<DerivativeFloor> {
    if !d.is_traceless() || !d.is_normalized() {
        return Err(Error::Domain(
            "exponent vector must be traceless-normalized".into(),
        ));
    }
    let n = d.dim();
    let (x0, analytic_pair) = construct_x0(n)?;
    let pair = eigen::eigen_pair(&x0, EigenSelect::ClosestTo(analytic_pair.value))?;
    let derivative_c = exp_family_derivative(d.exponents(), &pair)?;
    // d log|λ|/dt = Re(λ'/λ).
    let derivative = (derivative_c / pair.value).re;
    let d1 = d.d1();
    let (floor, exact) = if n % 2 == 1 {
        (d1, d1)
    } else {
        let nf = n as f64;
        (
            (nf - 2.0) / (2.0 * (nf - 1.0)) * d1,
            (d1 + d.exponents()[1]) / 2.0,
        )
    };
    Ok(DerivativeFloor {
        derivative,
        floor,
        exact,
    })
}
