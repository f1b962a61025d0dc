mod common;

use std::f64::consts::PI;

use common::*;
use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use sparkle_core::rpca::svt;
use sparkle_core::sparkle::soft_threshold_complex;
use sparkle_core::ComplexMatrix;

fn scalar_objective(w: Complex64, z: Complex64, lambda: f64) -> f64 {
    lambda * w.norm() + 0.5 * (w - z).norm_sqr()
}

/// Brute-force minimizer of `λ|w| + ½|w − z|²` over a polar grid.
fn polar_grid_argmin(z: Complex64, lambda: f64, radial: usize, angular: usize) -> (Complex64, f64) {
    let r_max = z.norm() + 1.0;
    let mut best = (Complex64::new(0.0, 0.0), scalar_objective(Complex64::new(0.0, 0.0), z, lambda));
    for a in 0..angular {
        let theta = 2.0 * PI * a as f64 / angular as f64;
        for k in 1..=radial {
            let w = Complex64::from_polar(r_max * k as f64 / radial as f64, theta);
            let f = scalar_objective(w, z, lambda);
            if f < best.1 {
                best = (w, f);
            }
        }
    }
    best
}

fn nuclear_norm(m: &ComplexMatrix) -> f64 {
    m.singular_values().unwrap().iter().sum()
}

fn svt_objective(z: &ComplexMatrix, m: &ComplexMatrix, lambda: f64) -> f64 {
    let diff = z - m;
    lambda * nuclear_norm(z) + 0.5 * diff.norm_l2().powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn soft_threshold_matches_polar_grid(
        mag in 0.0f64..3.0,
        phase in -PI..PI,
        lambda in 0.0f64..2.0,
    ) {
        let z = Complex64::from_polar(mag, phase);
        let (radial, angular) = (600, 720);
        let got = soft_threshold_complex(z, lambda).unwrap();
        let (grid_w, grid_f) = polar_grid_argmin(z, lambda, radial, angular);
        let dr = (mag + 1.0) / radial as f64;
        let resolution = dr + (mag + 1.0) * 2.0 * PI / angular as f64;
        prop_assert!((got - grid_w).norm() <= resolution, "{got} vs {grid_w}");
        prop_assert!(scalar_objective(got, z, lambda) <= grid_f + 1e-12);
    }

    #[test]
    fn svt_output_minimizes_the_prox_objective(seed in any::<u64>(), lambda in 0.0f64..4.0) {
        let mut r = rng(seed);
        let (rows, cols) = (2 + (seed % 3) as usize, 2 + (seed / 3 % 3) as usize);
        let m = cmat(&mut r, rows, cols);
        let z = svt(&m, lambda).unwrap();
        let f = svt_objective(&z, &m, lambda);
        prop_assert!(f <= svt_objective(&m, &m, lambda) + 1e-12);
        prop_assert!(f <= svt_objective(&Mat::zeros(rows, cols), &m, lambda) + 1e-12);
        for _ in 0..20 {
            let step = uniform(&mut r, 1e-4, 1e-1);
            let dir = cmat(&mut r, rows, cols);
            let perturbed = &z + &(&dir * faer::Scale(Complex64::new(step, 0.0)));
            prop_assert!(f <= svt_objective(&perturbed, &m, lambda) + 1e-12);
        }
        let rank_in = m.singular_values().unwrap().iter().filter(|s| **s > 1e-10).count();
        let rank_out = z.singular_values().unwrap().iter().filter(|s| **s > 1e-10).count();
        prop_assert!(rank_out <= rank_in);
    }

    #[test]
    fn svt_on_diagonal_shrinks_each_entry(a in 0.0f64..5.0, b in 0.0f64..5.0, lambda in 0.0f64..5.0) {
        let diag = |p: f64, q: f64| {
            Mat::from_fn(2, 2, |r, c| match (r, c) {
                (0, 0) => Complex64::new(p, 0.0),
                (1, 1) => Complex64::new(q, 0.0),
                _ => Complex64::new(0.0, 0.0),
            })
        };
        let got = svt(&diag(a, b), lambda).unwrap();
        let want = diag((a - lambda).max(0.0), (b - lambda).max(0.0));
        prop_assert!((&got - &want).norm_l2() <= 1e-12 * (1.0 + a.max(b)));
    }
}
