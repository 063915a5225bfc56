//! Monte Carlo accumulators, estimates, and the two-sample KS test used by
//! the Haar invariance checks.

use serde::{Deserialize, Serialize};

/// Per-batch running sums; merged across batches by a fixed-shape tree.
#[derive(Clone, Copy, Debug)]
pub struct BatchAccumulator {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub min: f64,
}

impl BatchAccumulator {
    pub fn new() -> Self {
        Self {
            count: 0,
            sum: 0.0,
            sum_sq: 0.0,
            min: f64::INFINITY,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
        self.min = self.min.min(x);
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            min: self.min.min(other.min),
        }
    }
}

impl Default for BatchAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

/// Value of an estimated integral: plain sample mean, its standard error,
/// and the provenance needed to reproduce it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// std_error = sample standard deviation (Bessel-corrected) / √n.
    pub fn from_accumulator(acc: &BatchAccumulator, seed: u64) -> Self {
        let n = acc.count as f64;
        let mean = acc.sum / n;
        let std_error = if acc.count < 2 {
            0.0
        } else {
            let var = ((acc.sum_sq - acc.sum * acc.sum / n) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        };
        Self {
            mean,
            std_error,
            n_samples: acc.count,
            seed,
        }
    }

    /// Mean clears k standard errors above zero.
    pub fn positive_at(&self, k: f64) -> bool {
        self.mean > k * self.std_error
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_std_error(&self, other: &Self) -> f64 {
        (self.std_error * self.std_error + other.std_error * other.std_error).sqrt()
    }

    /// Halve both mean and error (for integrals carrying a 1/2 prefactor).
    pub fn halved(mut self) -> Self {
        self.mean *= 0.5;
        self.std_error *= 0.5;
        self
    }
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// Returns the statistic D and the asymptotic p-value
/// (Numerical-Recipes-style effective-size correction).
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty() && !ys.is_empty());
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));

    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let (fa, fb) = (a[i], b[j]);
        if fa <= fb {
            i += 1;
        }
        if fb <= fa {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }

    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    (d, ks_q(lambda))
}

fn ks_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_sequence() {
        let mut acc = BatchAccumulator::new();
        for _ in 0..100 {
            acc.push(0.0);
        }
        let est = MonteCarloEstimate::from_accumulator(&acc, 7);
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.n_samples, 100);
    }

    #[test]
    fn estimate_matches_direct_formulas() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let mut acc = BatchAccumulator::new();
        for &x in &xs {
            acc.push(x);
        }
        let est = MonteCarloEstimate::from_accumulator(&acc, 0);
        assert!((est.mean - 2.5).abs() < 1e-15);
        // sample std dev = sqrt(5/3); SE = that / 2
        assert!((est.std_error - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(acc.min, 1.0);
    }

    #[test]
    fn ks_same_distribution_accepts() {
        // Deterministic low-discrepancy draws from the same distribution.
        let xs: Vec<f64> = (0..5000).map(|i| (i as f64 * 0.618_033_988_75).fract()).collect();
        let ys: Vec<f64> = (0..5000).map(|i| (i as f64 * 0.414_213_562_37).fract()).collect();
        let (_, p) = ks_two_sample(&xs, &ys);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn ks_shifted_distribution_rejects() {
        let xs: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.618_033_988_75).fract()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + 0.2).collect();
        let (d, p) = ks_two_sample(&xs, &ys);
        assert!(d > 0.15);
        assert!(p < 1e-6, "p = {p}");
    }
}
