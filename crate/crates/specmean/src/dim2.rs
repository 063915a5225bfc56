//! Exact dimension-2 analysis.
//!
//! For A = diag(a, 1/a) and a rotation R_θ, the product has trace
//! 2t·cos θ with t = (a + 1/a)/2, so its spectral radius has the closed form
//! |t cos θ| + √(t²cos²θ − 1) on the hyperbolic arcs and is exactly 1 on the
//! elliptic ones. More generally tr(A R_θ) = (σ₁+σ₂)·cos(θ − ψ) for any
//! A ∈ SL(2, ℝ), which makes log ρ(A R_θ) a π-periodic function of θ — the
//! fact the interval-gap counterexample rests on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::SquareMatrix;
use crate::quad;
use crate::tolerances;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// The family diag(a, 1/a)·R_θ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dim2Config {
    pub a: f64,
    pub theta: f64,
}

impl Dim2Config {
    pub fn new(a: f64, theta: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::Domain(format!("need a > 0, got {a}")));
        }
        Ok(Self {
            a,
            theta: theta.rem_euclid(TAU),
        })
    }

    /// t = (a + 1/a)/2 = tr(A R_θ) / (2 cos θ); always ≥ 1.
    pub fn trace_half(&self) -> f64 {
        (self.a + 1.0 / self.a) / 2.0
    }

    pub fn matrix(&self) -> SquareMatrix<f64> {
        SquareMatrix::diagonal(&[self.a, 1.0 / self.a]).mul(&SquareMatrix::rotation2(self.theta))
    }
}

/// Closed-form ρ(diag(a, 1/a)·R_θ): 1 on the elliptic arcs, otherwise
/// |t cos θ| + √(t²cos²θ − 1).
pub fn rho_rotation(cfg: &Dim2Config) -> f64 {
    let m = cfg.trace_half() * cfg.theta.cos();
    let disc = m * m - 1.0;
    if disc >= 0.0 {
        m.abs() + disc.sqrt()
    } else {
        1.0
    }
}

/// |cos θ| < 1/t: complex-conjugate unit-modulus eigenvalues, ρ = 1.
pub fn is_elliptic(cfg: &Dim2Config) -> bool {
    cfg.theta.cos().abs() < 1.0 / cfg.trace_half()
}

/// Trace parameters of θ ↦ A·R_θ: tr(A R_θ) = 2τ·cos(θ − ψ).
///
/// τ = (σ₁ + σ₂)/2 for special-linear A, so τ ≥ 1 with equality iff A is
/// orthogonal.
fn trace_wave(a: &SquareMatrix<f64>) -> (f64, f64) {
    let p = a.get(0, 0) + a.get(1, 1);
    let q = a.get(1, 0) - a.get(0, 1);
    let k = (p * p + q * q).sqrt();
    (k / 2.0, q.atan2(p))
}

/// ∫ over the tail [β, x*] of acosh(τ cos x), with the square-root behavior
/// at x* removed by the substitution x = x* − w².
fn hyperbolic_tail(tau: f64, x_star: f64, beta: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    debug_assert!((0.0..=x_star).contains(&beta));
    let w_max = (x_star - beta).sqrt();
    if w_max == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (xi, wi) in nodes.iter().zip(weights) {
        let w = w_max * (xi + 1.0) / 2.0;
        let arg = (tau * (x_star - w * w).cos()).max(1.0);
        total += wi * arg.acosh() * 2.0 * w;
    }
    total * w_max / 2.0
}

/// Antiderivative Φ(x) = ∫_{-π/2}^{x} log ρ values of the π-periodic arc
/// integrand acosh⁺(τ|cos u|) du.
struct ArcIntegrator {
    tau: f64,
    x_star: f64,
    /// Full integral over one period.
    period: f64,
    /// Half-window integral G(0) = ∫_0^{x*}.
    half_window: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ArcIntegrator {
    fn new(tau: f64, n_nodes: usize) -> Self {
        let (nodes, weights) = quad::gauss_legendre(n_nodes.max(32));
        let x_star = if tau <= 1.0 {
            0.0
        } else {
            (1.0 / tau).clamp(-1.0, 1.0).acos()
        };
        let half_window = hyperbolic_tail(tau, x_star, 0.0, &nodes, &weights);
        Self {
            tau,
            x_star,
            period: 2.0 * half_window,
            half_window,
            nodes,
            weights,
        }
    }

    /// H(y) = ∫_{-π/2}^{y} over one period, y ∈ [-π/2, π/2].
    fn within_period(&self, y: f64) -> f64 {
        if self.x_star == 0.0 {
            return 0.0;
        }
        if y <= -self.x_star {
            0.0
        } else if y < 0.0 {
            hyperbolic_tail(self.tau, self.x_star, -y, &self.nodes, &self.weights)
        } else if y < self.x_star {
            2.0 * self.half_window
                - hyperbolic_tail(self.tau, self.x_star, y, &self.nodes, &self.weights)
        } else {
            self.period
        }
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let k = ((x + PI / 2.0) / PI).floor();
        let y = x - k * PI;
        k * self.period + self.within_period(y)
    }

    /// ∫_{lo}^{hi} acosh⁺(τ|cos u|) du.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }
}

/// Deterministic value of ⨍_{SO(2)} log ρ(diag(a, 1/a)·R_θ) dθ.
///
/// The integrand has square-root kinks at the elliptic/hyperbolic boundary,
/// so the arcs are integrated with a substitution that removes them; the
/// node count buys Gauss-Legendre points per arc. Equals log((a + 1/a)/2).
pub fn exact_average_2d(a: f64, n_nodes: usize) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Domain(format!("need a > 0, got {a}")));
    }
    if n_nodes < 1024 {
        return Err(Error::Domain(format!(
            "need n_nodes >= 1024 for the certified tolerance, got {n_nodes}"
        )));
    }
    let tau = (a + 1.0 / a) / 2.0;
    let integrator = ArcIntegrator::new(tau, n_nodes);
    Ok(integrator.integral(0.0, TAU) / TAU)
}

/// Average of log ρ(A·R_θ) over any angle interval for special-linear A.
pub fn so2_log_radius_average(a: &SquareMatrix<f64>, n_nodes: usize) -> Result<f64> {
    require_sl2(a)?;
    let (tau, _psi) = trace_wave(a);
    let integrator = ArcIntegrator::new(tau, n_nodes);
    Ok(integrator.integral(0.0, TAU) / TAU)
}

/// Distance between angles on the half-turn circle (log ρ(A R_θ) has period
/// π in θ, so avoidance constraints live mod π).
pub fn half_turn_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(PI);
    d.min(PI - d)
}

/// Does [lo, hi] meet the open window of half-width s around c, taken mod π?
/// Exact interval arithmetic over the unrolled copies of the window.
fn interval_meets_half_turn_window(lo: f64, hi: f64, c: f64, s: f64) -> bool {
    let width = s - 1e-12; // boundary contact is allowed
    let base = c.rem_euclid(PI);
    let k0 = ((lo - base - width) / PI).floor() as i64;
    let k1 = ((hi - base + width) / PI).ceil() as i64;
    for k in k0..=k1 {
        let center = base + k as f64 * PI;
        if lo.max(center - width) < hi.min(center + width) {
            return true;
        }
    }
    false
}

/// Support description of a probability measure on SO(2) avoiding an arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSupport {
    /// Finitely many weighted angles.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Piecewise-constant density: cells (lo, hi, mass).
    Density { cells: Vec<(f64, f64, f64)> },
}

/// A measure on SO(2) whose support omits the gap arc (and, because the
/// integrand has period π, its antipodal image).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcGapMeasure {
    pub gap_lo: f64,
    pub gap_hi: f64,
    pub support: MeasureSupport,
}

impl ArcGapMeasure {
    pub fn new(gap_lo: f64, gap_hi: f64, support: MeasureSupport) -> Result<Self> {
        let measure = Self {
            gap_lo,
            gap_hi,
            support,
        };
        measure.validate()?;
        Ok(measure)
    }

    /// Gap midpoint c and half-length s, unwrapping gaps that cross 2π.
    pub fn gap_center_halflength(&self) -> (f64, f64) {
        let lo = self.gap_lo.rem_euclid(TAU);
        let mut hi = self.gap_hi.rem_euclid(TAU);
        if hi < lo {
            hi += TAU;
        }
        (((lo + hi) / 2.0).rem_euclid(TAU), (hi - lo) / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (c, s) = self.gap_center_halflength();
        let clears = |angle: f64| half_turn_distance(angle, c) >= s - 1e-12;
        let mass: f64 = match &self.support {
            MeasureSupport::Atoms { atoms } => {
                for &(angle, weight) in atoms {
                    if weight < 0.0 {
                        return Err(Error::Domain("atom weights must be >= 0".into()));
                    }
                    if !clears(angle) {
                        return Err(Error::Domain(format!(
                            "atom at {angle} lies inside the omitted arc"
                        )));
                    }
                }
                atoms.iter().map(|&(_, w)| w).sum()
            }
            MeasureSupport::Density { cells } => {
                for &(lo, hi, mass) in cells {
                    if hi <= lo || hi.is_nan() || lo.is_nan() || mass < 0.0 || hi - lo > TAU {
                        return Err(Error::Domain(format!(
                            "invalid density cell ({lo}, {hi}, {mass})"
                        )));
                    }
                    if s > 0.0 && interval_meets_half_turn_window(lo, hi, c, s) {
                        return Err(Error::Domain(format!(
                            "density cell ({lo}, {hi}) crosses the omitted arc"
                        )));
                    }
                }
                cells.iter().map(|&(_, _, m)| m).sum()
            }
        };
        if (mass - 1.0).abs() > tolerances::MEASURE_MASS_TOL {
            return Err(Error::Domain(format!(
                "measure mass {mass} is not 1 within {}",
                tolerances::MEASURE_MASS_TOL
            )));
        }
        Ok(())
    }
}

/// The interval-gap construction A = diag(β, 1/β)·R_{−c} with its parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub matrix: SquareMatrix<f64>,
    pub beta: f64,
    pub c: f64,
    pub s: f64,
    pub alpha: f64,
}

impl Counterexample {
    /// Half-width of the hyperbolic window around the gap center (mod π);
    /// strictly smaller than s by construction.
    pub fn hyperbolic_halfwidth(&self) -> f64 {
        let t = (self.beta + 1.0 / self.beta) / 2.0;
        (1.0 / t).clamp(-1.0, 1.0).acos()
    }

    /// Worst |ρ(A R_θ) − 1| over deterministic probes of the certified
    /// region {θ : |cos(θ − c)| ≤ cos s}, computed through the full
    /// eigenvalue path rather than the closed form.
    pub fn certificate_max_deviation(&self, n_probes: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        let mut probed = 0usize;
        let mut k = 0usize;
        // Golden-angle sweep: deterministic, fills the circle evenly.
        let step = TAU * 0.381_966_011_250_105;
        while probed < n_probes {
            let theta = (k as f64 * step).rem_euclid(TAU);
            k += 1;
            if half_turn_distance(theta, self.c) < self.s {
                continue;
            }
            let m = self.matrix.mul(&SquareMatrix::rotation2(theta));
            let rho = linalg::spectral_radius(&m)?;
            worst = worst.max((rho - 1.0).abs());
            probed += 1;
        }
        Ok(worst)
    }
}

/// Build the gap counterexample: c the gap midpoint, s its half-length,
/// α = 1/cos(s), and β chosen with β + 1/β < 2α (log-midpoint by default)
/// so that A·R_θ is elliptic on the entire support complement.
pub fn build_counterexample(gap_lo: f64, gap_hi: f64, beta: Option<f64>) -> Result<Counterexample> {
    let lo = gap_lo.rem_euclid(TAU);
    let mut hi = gap_hi.rem_euclid(TAU);
    if hi < lo {
        hi += TAU;
    }
    let s = (hi - lo) / 2.0;
    let c = ((lo + hi) / 2.0).rem_euclid(TAU);
    if s <= 0.0 {
        return Err(Error::Domain("gap must have positive length".into()));
    }
    if s >= PI / 2.0 {
        return Err(Error::OutOfRegime {
            t: s,
            limit: PI / 2.0,
        });
    }
    let alpha = 1.0 / s.cos();
    let beta = match beta {
        Some(b) => {
            if !b.is_finite() || b <= 0.0 || b + 1.0 / b >= 2.0 * alpha {
                return Err(Error::Domain(format!(
                    "beta = {b} violates beta + 1/beta < 2*alpha = {}",
                    2.0 * alpha
                )));
            }
            b
        }
        None => (alpha.acosh() / 2.0).exp(),
    };
    let matrix = SquareMatrix::diagonal(&[beta, 1.0 / beta]).mul(&SquareMatrix::rotation2(-c));
    Ok(Counterexample {
        matrix,
        beta,
        c,
        s,
        alpha,
    })
}

/// ∫ log ρ(A R_θ) dμ: exact weighted sum over atoms, arc-quadrature over
/// density cells.
pub fn measure_average_2d(a: &SquareMatrix<f64>, mu: &ArcGapMeasure) -> Result<f64> {
    require_sl2(a)?;
    mu.validate()?;
    let (tau, psi) = trace_wave(a);
    match &mu.support {
        MeasureSupport::Atoms { atoms } => {
            let mut total = 0.0;
            for &(angle, weight) in atoms {
                let m = tau * (angle - psi).cos();
                let disc = m * m - 1.0;
                let log_rho = if disc >= 0.0 {
                    (m.abs() + disc.sqrt()).ln()
                } else {
                    0.0
                };
                total += weight * log_rho;
            }
            Ok(total)
        }
        MeasureSupport::Density { cells } => {
            let integrator = ArcIntegrator::new(tau, 512);
            let mut total = 0.0;
            for &(lo, hi, mass) in cells {
                total += mass / (hi - lo) * integrator.integral(lo - psi, hi - psi);
            }
            Ok(total)
        }
    }
}

fn require_sl2(a: &SquareMatrix<f64>) -> Result<()> {
    if a.dim() != 2 {
        return Err(Error::Domain(format!(
            "expected a 2x2 matrix, got {0}x{0}",
            a.dim()
        )));
    }
    a.require_special_linear()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeededStream;
    use rand::RngExt;

    #[test]
    fn rho_rotation_examples() {
        // a = 2, θ = 0: ρ = t + sqrt(t²−1) = 1.25 + 0.75 = 2.
        let cfg = Dim2Config::new(2.0, 0.0).unwrap();
        assert!((rho_rotation(&cfg) - 2.0).abs() < 1e-14);
        assert!(!is_elliptic(&cfg));

        // Trace-zero: elliptic with ρ = 1.
        let cfg = Dim2Config::new(2.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(rho_rotation(&cfg), 1.0);
        assert!(is_elliptic(&cfg));

        // Parabolic boundary: t cos θ = 1 exactly at cos θ = 0.8, a = 2.
        let cfg = Dim2Config::new(2.0, 0.8f64.acos()).unwrap();
        let rho = rho_rotation(&cfg);
        assert!((rho - 1.0).abs() < 1e-7, "rho = {rho}");
    }

    #[test]
    fn rho_rotation_agrees_with_eigensolver() {
        let mut stream = SeededStream::new(31);
        let mut rng = stream.next_rng();
        for _ in 0..500 {
            let a = (rng.random::<f64>() * 3.0 - 1.5f64).exp();
            let theta = rng.random::<f64>() * TAU;
            let cfg = Dim2Config::new(a, theta).unwrap();
            let direct = linalg::spectral_radius(&cfg.matrix()).unwrap();
            assert!(
                (rho_rotation(&cfg) - direct).abs() < 1e-10,
                "a = {a}, theta = {theta}"
            );
            if is_elliptic(&cfg) {
                assert!((rho_rotation(&cfg) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn elliptic_criterion_at_unit_a() {
        let cfg = Dim2Config::new(1.0, 0.3).unwrap();
        assert!(is_elliptic(&cfg));
        let cfg = Dim2Config::new(1.0, 0.0).unwrap();
        assert!(!is_elliptic(&cfg)); // |cos 0| = 1 is not < 1
        let cfg = Dim2Config::new(2.0, std::f64::consts::FRAC_PI_3).unwrap();
        assert!(is_elliptic(&cfg)); // cos = 0.5 < 0.8
    }

    #[test]
    fn exact_average_matches_closed_form() {
        for a in [1.1f64, 2.0, 5.0, 10.0] {
            let value = exact_average_2d(a, 2048).unwrap();
            let closed = ((a + 1.0 / a) / 2.0).ln();
            assert!(
                (value - closed).abs() < 1e-12,
                "a = {a}: {value} vs {closed}"
            );
        }
        assert_eq!(exact_average_2d(1.0, 1024).unwrap(), 0.0);
        assert!(exact_average_2d(2.0, 512).is_err());
    }

    #[test]
    fn critical_point_quotient_decreases() {
        let mut quotients = Vec::new();
        for h in [1e-1f64, 1e-2, 1e-3] {
            let value = exact_average_2d(h.exp(), 2048).unwrap();
            quotients.push(value / h);
        }
        assert!(quotients[0] > quotients[1] && quotients[1] > quotients[2]);
        assert!(quotients[2] < 1e-2);
    }

    #[test]
    fn counterexample_construction_parameters() {
        let gap = (std::f64::consts::FRAC_PI_2 - 0.3, std::f64::consts::FRAC_PI_2 + 0.3);
        let ce = build_counterexample(gap.0, gap.1, None).unwrap();
        assert!((ce.c - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!((ce.s - 0.3).abs() < 1e-14);
        assert!((ce.alpha - 1.0 / 0.3f64.cos()).abs() < 1e-14);
        assert!(ce.beta > 1.0);
        assert!(ce.beta + 1.0 / ce.beta < 2.0 * ce.alpha);
        assert!(ce.matrix.is_special_linear());
        // Hyperbolic window strictly inside the gap.
        assert!(ce.hyperbolic_halfwidth() < ce.s);

        let deviation = ce.certificate_max_deviation(2_000).unwrap();
        assert!(deviation <= tolerances::ARC_QUADRATURE_TOL, "deviation {deviation}");
    }

    #[test]
    fn counterexample_shrinking_gap_approaches_rotation() {
        let ce = build_counterexample(1.0, 1.0 + 1e-9, None).unwrap();
        assert!((ce.beta - 1.0).abs() < 1e-4);
        let deviation = ce.certificate_max_deviation(500).unwrap();
        assert!(deviation <= tolerances::ARC_QUADRATURE_TOL);
    }

    #[test]
    fn counterexample_rejects_wide_gaps_and_bad_beta() {
        assert!(matches!(
            build_counterexample(0.0, PI, None),
            Err(Error::OutOfRegime { .. })
        ));
        assert!(build_counterexample(0.0, 0.6, Some(10.0)).is_err());
        assert!(build_counterexample(1.0, 1.0, None).is_err());
    }

    #[test]
    fn measure_average_zero_on_certified_atoms() {
        let ce = build_counterexample(1.2, 1.8, None).unwrap();
        let atoms = vec![
            (ce.c + ce.s + 0.05, 0.25),
            (ce.c + PI / 2.0, 0.25),
            (ce.c - ce.s - 0.2, 0.3),
            (ce.c + PI / 2.0 + 0.4, 0.2),
        ];
        let mu = ArcGapMeasure::new(1.2, 1.8, MeasureSupport::Atoms { atoms }).unwrap();
        let avg = measure_average_2d(&ce.matrix, &mu).unwrap();
        assert_eq!(avg, 0.0);
    }

    #[test]
    fn measure_average_uniform_matches_exact() {
        let a = SquareMatrix::<f64>::diagonal(&[2.0, 0.5]);
        let mu = ArcGapMeasure::new(
            0.0,
            0.0,
            MeasureSupport::Density {
                cells: vec![(0.0, TAU, 1.0)],
            },
        )
        .unwrap();
        let avg = measure_average_2d(&a, &mu).unwrap();
        assert!((avg - 1.25f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn measure_average_identity_is_zero() {
        let mu = ArcGapMeasure::new(
            0.5,
            1.0,
            MeasureSupport::Atoms {
                atoms: vec![(2.0, 1.0)],
            },
        )
        .unwrap();
        let avg = measure_average_2d(&SquareMatrix::<f64>::identity(2), &mu).unwrap();
        assert_eq!(avg, 0.0);
    }

    #[test]
    fn density_cell_sliver_crossings_detected() {
        // A cell that only grazes a window copy must still be rejected.
        let c = 1.5f64;
        let s = 0.2f64;
        // Barely overlapping from the left of the antipodal copy.
        let lo = c + PI - s - 0.3;
        let hi = c + PI - s + 1e-6;
        assert!(ArcGapMeasure::new(
            c - s,
            c + s,
            MeasureSupport::Density {
                cells: vec![(lo, hi, 1.0)]
            }
        )
        .is_err());
        // Ending exactly at the window boundary is allowed.
        let ok = ArcGapMeasure::new(
            c - s,
            c + s,
            MeasureSupport::Density {
                cells: vec![(lo, c + PI - s, 1.0)],
            },
        );
        assert!(ok.is_ok());
        // A cell fully containing a window is rejected too.
        assert!(ArcGapMeasure::new(
            c - s,
            c + s,
            MeasureSupport::Density {
                cells: vec![(c - 1.0, c + 1.0, 1.0)]
            }
        )
        .is_err());
    }

    #[test]
    fn measure_validation_rejects_gap_violations() {
        // Atom inside the gap itself.
        assert!(ArcGapMeasure::new(
            1.0,
            2.0,
            MeasureSupport::Atoms {
                atoms: vec![(1.5, 1.0)]
            }
        )
        .is_err());
        // Atom at the antipodal image of the gap (same mod-π position).
        assert!(ArcGapMeasure::new(
            1.0,
            2.0,
            MeasureSupport::Atoms {
                atoms: vec![(1.5 + PI, 1.0)]
            }
        )
        .is_err());
        // Mass violation.
        assert!(ArcGapMeasure::new(
            1.0,
            2.0,
            MeasureSupport::Atoms {
                atoms: vec![(0.0, 0.5)]
            }
        )
        .is_err());
    }

    #[test]
    fn trace_wave_recovers_singular_values() {
        let mut stream = SeededStream::new(32);
        for _ in 0..20 {
            let mut rng = stream.next_rng();
            let a = (rng.random::<f64>() * 2.0 - 1.0f64).exp();
            let theta = rng.random::<f64>() * TAU;
            let m = SquareMatrix::diagonal(&[a, 1.0 / a]).mul(&SquareMatrix::rotation2(theta));
            let (tau, _) = trace_wave(&m);
            let s = linalg::singular_values(&m).unwrap();
            assert!(((s.values()[0] + s.values()[1]) / 2.0 - tau).abs() < 1e-12);
        }
    }
}
