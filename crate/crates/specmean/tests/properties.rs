//! Property tests for the structural invariants: singular-value invariance
//! under one-sided orthogonal factors, norm dominance, determinant products,
//! pointwise AM-GM, Gershgorin containment, and the dimension-2 closed form.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::RngExt;

use specmean::dim2::{self, Dim2Config};
use specmean::eigen::{self, EigenSelect};
use specmean::field::{Field, C64};
use specmean::integrals::{self, WeightVector};
use specmean::linalg;
use specmean::matrix::SquareMatrix;
use specmean::perturb;
use specmean::sampling::{self, SeededStream};
use specmean::SquareMatrix as Matrix;

fn gaussian_matrix(n: usize, seed: u64) -> SquareMatrix<f64> {
    let mut rng = SeededStream::new(seed).next_rng();
    Matrix::from_inner(DMatrix::from_fn(n, n, |_, _| f64::gaussian(&mut rng))).unwrap()
}

fn gaussian_complex_matrix(n: usize, seed: u64) -> SquareMatrix<C64> {
    let mut rng = SeededStream::new(seed).next_rng();
    Matrix::from_inner(DMatrix::from_fn(n, n, |_, _| C64::gaussian(&mut rng))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_invariant_under_orthogonal_factors(
        seed in 0u64..1_000_000,
        n in 2usize..6,
    ) {
        let a = gaussian_matrix(n, seed);
        let mut stream = SeededStream::new(seed ^ 0xabcd);
        let p = sampling::sample_haar_orthogonal(n, &mut stream).unwrap();

        let base = linalg::singular_values(&a).unwrap();
        let right = linalg::singular_values(&a.mul(&p)).unwrap();
        let left = linalg::singular_values(&p.mul(&a)).unwrap();
        for i in 0..n {
            prop_assert!((base.values()[i] - right.values()[i]).abs() < specmean::tolerances::SV_INVARIANCE_TOL);
            prop_assert!((base.values()[i] - left.values()[i]).abs() < specmean::tolerances::SV_INVARIANCE_TOL);
        }
    }

    #[test]
    fn spectral_radius_dominated_by_operator_norm(
        seed in 0u64..1_000_000,
        n in 2usize..7,
    ) {
        let a = gaussian_matrix(n, seed);
        let rho = linalg::spectral_radius(&a).unwrap();
        let norm = linalg::operator_norm(&a).unwrap();
        prop_assert!(rho <= norm + 1e-10 * (1.0 + norm));
    }

    #[test]
    fn singular_value_product_is_abs_determinant(
        seed in 0u64..1_000_000,
        n in 2usize..6,
    ) {
        let a = gaussian_matrix(n, seed);
        let product = linalg::singular_values(&a).unwrap().product();
        let det = a.determinant().abs();
        prop_assert!((product - det).abs() <= specmean::tolerances::SV_PRODUCT_REL_TOL * (1.0 + det));
    }

    #[test]
    fn localized_bound_for_sl_times_orthogonal(
        seed in 0u64..1_000_000,
        n in 2usize..6,
    ) {
        let raw = gaussian_matrix(n, seed);
        let a = match linalg::normalize_to_sl(&raw) {
            Ok(a) => a,
            Err(_) => {
                // Negative orientation: flip one row first.
                let mut inner = raw.into_inner();
                for j in 0..n {
                    inner[(0, j)] = -inner[(0, j)];
                }
                linalg::normalize_to_sl(&Matrix::from_inner(inner).unwrap()).unwrap()
            }
        };
        let mut stream = SeededStream::new(seed ^ 0x77);
        let x = sampling::sample_haar_orthogonal(n, &mut stream).unwrap();
        let rho = linalg::spectral_radius(&a.mul(&x)).unwrap();
        prop_assert!(rho >= 1.0 - 1e-10, "rho = {rho}");
    }

    #[test]
    fn pointwise_amgm_bound(
        seed in 0u64..1_000_000,
        n in 2usize..6,
    ) {
        let mut rng = SeededStream::new(seed).next_rng();
        let weights: Vec<f64> = (0..n)
            .map(|_| (rng.random::<f64>() * 4.0 - 2.0f64).exp())
            .collect();
        let a = WeightVector::new(weights.clone()).unwrap();
        let mut stream = SeededStream::new(seed ^ 0x99);
        let u = sampling::sample_sphere(n, &mut stream).unwrap();
        let u_slice: Vec<f64> = u.iter().copied().collect();

        let value = weights
            .iter()
            .zip(&u_slice)
            .map(|(ai, ui)| ai * ui * ui)
            .sum::<f64>()
            .ln();
        let bound = integrals::amgm_lower_bound(&a, &u_slice).unwrap();
        prop_assert!(value >= bound - 1e-12);

        // Equality case: all weights equal.
        let flat = WeightVector::new(vec![weights[0]; n]).unwrap();
        let flat_bound = integrals::amgm_lower_bound(&flat, &u_slice).unwrap();
        let flat_value = (weights[0] * u_slice.iter().map(|x| x * x).sum::<f64>()).ln();
        prop_assert!((flat_value - flat_bound).abs() <= 1e-12);
    }

    #[test]
    fn gershgorin_containment_random(
        seed in 0u64..1_000_000,
        n in 2usize..7,
    ) {
        let a = gaussian_matrix(n, seed);
        prop_assert!(perturb::check_eigenvalue_containment(&a).unwrap().contained);
        let c = gaussian_complex_matrix(n, seed ^ 0x1111);
        prop_assert!(perturb::check_eigenvalue_containment(&c).unwrap().contained);
    }

    #[test]
    fn sphere_integral_nonnegative_for_normalized_weights(
        seed in 0u64..1_000_000,
        n in 2usize..5,
    ) {
        let mut rng = SeededStream::new(seed).next_rng();
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let weights: Vec<f64> = raw.iter().map(|g| (g - mean).exp()).collect();
        let a = WeightVector::new(weights).unwrap();
        prop_assert!(a.is_sl_normalized());

        let mut stream = SeededStream::new(seed ^ 0xfeed);
        let est = integrals::sphere_log_integral(&a, 4_000, &mut stream).unwrap();
        // Nonnegative in expectation: allow the Monte Carlo band.
        prop_assert!(est.mean > -5.0 * est.std_error - 1e-12);
    }

    #[test]
    fn svd_factors_reconstruct_random(
        seed in 0u64..1_000_000,
        n in 2usize..6,
    ) {
        let a = gaussian_matrix(n, seed);
        let (p1, s, p2) = linalg::svd_factors(&a).unwrap();
        prop_assert!(p1.orthogonality_residual() < 1e-10);
        prop_assert!(p2.orthogonality_residual() < 1e-10);
        let recon = p1.mul(&Matrix::diagonal(s.values())).mul(&p2);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((recon.get(i, j) - a.get(i, j)).abs());
            }
        }
        prop_assert!(worst <= 1e-10 * s.sigma1().max(1.0));
    }

    #[test]
    fn eigen_pair_residual_contract(
        seed in 0u64..1_000_000,
        n in 2usize..6,
    ) {
        let a = gaussian_matrix(n, seed);
        if let Ok(pair) = eigen::eigen_pair(&a, EigenSelect::LargestModulus) {
            let lifted = a.to_complex();
            let residual =
                (lifted.inner() * &pair.vector - &pair.vector * pair.value).norm();
            let norm = linalg::operator_norm(&a).unwrap();
            prop_assert!(residual <= 1e-9 * (1.0 + norm));
            prop_assert!((pair.vector.norm() - 1.0).abs() <= specmean::tolerances::EIGENVECTOR_NORM_TOL);
        }
    }
}

#[test]
fn dim2_closed_form_against_eigensolver_bulk() {
    // The invariant asks for agreement over ten thousand random configs.
    let mut stream = SeededStream::new(0x2d2d);
    let mut rng = stream.next_rng();
    for i in 0..10_000 {
        let a = (rng.random::<f64>() * 4.0 - 2.0f64).exp();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let cfg = Dim2Config::new(a, theta).unwrap();
        let closed = dim2::rho_rotation(&cfg);
        let direct = linalg::spectral_radius(&cfg.matrix()).unwrap();
        assert!(
            (closed - direct).abs() < 1e-10 * (1.0 + closed),
            "case {i}: a = {a}, theta = {theta}: {closed} vs {direct}"
        );
        if dim2::is_elliptic(&cfg) {
            assert!((closed - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn exact_average_regression_values() {
    // Frozen from the quadrature oracle, cross-checked against the closed
    // form log((a + 1/a)/2).
    let cases = [
        (1.1f64, 0.004_535_155_165_391_363f64),
        (2.0, 0.223_143_551_314_209_76),
        (5.0, 0.955_511_445_027_436_3),
        (10.0, 1.619_388_243_287_268_4),
    ];
    for (a, expect) in cases {
        let value = dim2::exact_average_2d(a, 4096).unwrap();
        assert!((value - expect).abs() < 1e-8, "a = {a}: {value} vs {expect}");
        assert!((value - ((a + 1.0 / a) / 2.0).ln()).abs() < 1e-12);
    }
}
