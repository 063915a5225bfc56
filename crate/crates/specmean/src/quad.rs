//! Deterministic quadrature companions to the Monte Carlo estimators:
//! Gauss-Legendre nodes and sphere-average rules for n = 2 and n = 3.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Average of f over the unit circle by the periodic trapezoid rule;
/// spectrally accurate for smooth periodic integrands.
pub fn circle_average(n_nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n_nodes.max(1);
    let mut sum = 0.0;
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        sum += f(theta);
    }
    sum / n as f64
}

/// Average of f(u) over S² via Gauss-Legendre in cos θ times periodic
/// trapezoid in the azimuth.
pub fn sphere3_average(n_polar: usize, n_azimuth: usize, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let (nodes, weights) = gauss_legendre(n_polar);
    let mut total = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let r = (1.0 - x * x).sqrt();
        let mut ring = 0.0;
        for k in 0..n_azimuth {
            let phi = std::f64::consts::TAU * k as f64 / n_azimuth as f64;
            ring += f(r * phi.cos(), r * phi.sin(), *x);
        }
        total += w * ring / n_azimuth as f64;
    }
    // GL weights sum to 2 = the measure of [-1, 1].
    total / 2.0
}

/// Deterministic value of ∫ log(Σ aᵢuᵢ²) dσ for n ∈ {2, 3}.
///
/// n = 2 uses the periodic trapezoid (the integrand is analytic for positive
/// weights); n = 3 the product rule above. Higher dimensions have no
/// quadrature path here — Monte Carlo only.
pub fn sphere_log_integral_quadrature(weights: &[f64], refine: u32) -> Result<f64> {
    if weights.iter().any(|&a| !a.is_finite() || a <= 0.0) {
        return Err(Error::Domain("weights must be strictly positive".into()));
    }
    let factor = 1usize << refine;
    match weights.len() {
        2 => {
            let (a1, a2) = (weights[0], weights[1]);
            Ok(circle_average(4096 * factor, |theta| {
                let (c, s) = (theta.cos(), theta.sin());
                (a1 * c * c + a2 * s * s).ln()
            }))
        }
        3 => {
            let (a1, a2, a3) = (weights[0], weights[1], weights[2]);
            Ok(sphere3_average(256 * factor, 512 * factor, |u1, u2, u3| {
                (a1 * u1 * u1 + a2 * u2 * u2 + a3 * u3 * u3).ln()
            }))
        }
        n => Err(Error::Unsupported(format!(
            "quadrature on the sphere is provided for n in {{2, 3}}, not n = {n}"
        ))),
    }
}
