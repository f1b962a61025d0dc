//! Block updates of the ADMM solver against an independently coded augmented
//! Lagrangian.

mod common;

use common::*;
use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use sparkle_core::sparkle::{solve_samples, update_i, update_multipliers, update_u, update_v, update_x};
use sparkle_core::{ComplexMatrix, SolverParams, SolverState, UnliftMode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn x_update_is_stationary_in_average_mode(seed in any::<u64>()) {
        let Instance { y, tau, mut state } = instance(seed);
        state.x = update_x(&state, &y, UnliftMode::Average);
        let n = y.len();
        let grad = fd_gradient(&state, n, |s, k| &mut s.x[k], |s| lagrangian(&y, tau, s));
        prop_assert!(vnorm(&grad) < 1e-5, "gradient norm {}", vnorm(&grad));
    }

    #[test]
    fn i_update_is_stationary(seed in any::<u64>()) {
        let Instance { y, tau, mut state } = instance(seed);
        state.i = update_i(&state, &y, tau);
        // smooth part only; the ℓ₁ term enters through its subdifferential
        let smooth = |s: &SolverState| lagrangian(&y, 0.0, s);
        let grad = fd_gradient(&state, y.len(), |s, k| &mut s.i[k], smooth);
        let residual: Vec<Complex64> = grad
            .iter()
            .zip(&state.i)
            .map(|(g, i)| {
                if i.norm() > 0.0 {
                    g + tau * i / i.norm()
                } else {
                    // distance from −g to the disk of radius τ
                    let excess = (g.norm() - tau).max(0.0);
                    Complex64::new(excess, 0.0)
                }
            })
            .collect();
        prop_assert!(vnorm(&residual) < 1e-5, "residual norm {}", vnorm(&residual));
    }

    #[test]
    fn u_update_is_stationary(seed in any::<u64>()) {
        let Instance { y, tau, mut state } = instance(seed);
        state.u = update_u(&state);
        let count = state.u.nrows() * state.u.ncols();
        let grad = fd_gradient(&state, count, |s, k| matrix_slot(&mut s.u, k), |s| lagrangian(&y, tau, s));
        prop_assert!(vnorm(&grad) < 1e-5, "gradient norm {}", vnorm(&grad));
    }

    #[test]
    fn v_update_is_stationary(seed in any::<u64>()) {
        let Instance { y, tau, mut state } = instance(seed);
        state.v = update_v(&state);
        let count = state.v.nrows() * state.v.ncols();
        let grad = fd_gradient(&state, count, |s, k| matrix_slot(&mut s.v, k), |s| lagrangian(&y, tau, s));
        prop_assert!(vnorm(&grad) < 1e-5, "gradient norm {}", vnorm(&grad));
    }

    #[test]
    fn factor_updates_satisfy_first_order_conditions(seed in any::<u64>()) {
        let Instance { mut state, .. } = instance(seed);
        let (m, n) = (state.q.nrows(), state.q.ncols());
        let shifted = |s: &SolverState, uv: &ComplexMatrix| {
            Mat::from_fn(m, n, |r, c| s.x[r + c] - uv[(r, c)] + s.q[(r, c)] / s.mu)
        };

        state.u = update_u(&state);
        let uv = &state.u * state.v.adjoint();
        let rhs = &shifted(&state, &uv) * &state.v * faer::Scale(Complex64::new(state.mu, 0.0));
        prop_assert!((&state.u - &rhs).norm_l2() < 1e-10 * state.u.norm_l2().max(1e-300));

        state.v = update_v(&state);
        let uv = &state.u * state.v.adjoint();
        let rhs = shifted(&state, &uv).adjoint() * &state.u * faer::Scale(Complex64::new(state.mu, 0.0));
        prop_assert!((&state.v - &rhs).norm_l2() < 1e-10 * state.v.norm_l2().max(1e-300));
    }

    #[test]
    fn pick_x_update_is_the_closed_form_verbatim(seed in any::<u64>()) {
        let Instance { y, state, .. } = instance(seed);
        let got = update_x(&state, &y, UnliftMode::Pick);
        let (m, n) = (state.q.nrows(), state.q.ncols());
        let (beta, mu) = (state.beta, state.mu);
        let picked = |r: usize, c: usize| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..state.u.ncols() {
                acc += state.u[(r, j)] * state.v[(c, j)].conj();
            }
            acc - state.q[(r, c)] / mu
        };
        for k in 0..y.len() {
            let (r, c) = if k < m { (k, 0) } else { (m - 1, k + 1 - m) };
            prop_assert!(c < n);
            let want = (1.0 / (mu + beta)) * (beta * (y[k] - state.i[k] + state.p[k] / beta) + mu * picked(r, c));
            prop_assert_eq!(got[k].re.to_bits(), want.re.to_bits());
            prop_assert_eq!(got[k].im.to_bits(), want.im.to_bits());
        }
    }

    #[test]
    fn multipliers_are_residual_ascent(seed in any::<u64>()) {
        let Instance { y, state, .. } = instance(seed);
        let (p, q) = update_multipliers(&state, &y);
        for k in 0..y.len() {
            let want = state.p[k] + state.beta * (y[k] - state.x[k] - state.i[k]);
            prop_assert!((p[k] - want).norm() <= 1e-14 * (1.0 + want.norm()));
        }
        let uv = &state.u * state.v.adjoint();
        for c in 0..q.ncols() {
            for r in 0..q.nrows() {
                let want = state.q[(r, c)] + state.mu * (state.x[r + c] - uv[(r, c)]);
                prop_assert!((q[(r, c)] - want).norm() <= 1e-13 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn converged_runs_end_below_tolerance(seed in any::<u64>(), max_iters in 1usize..40) {
        let mut r = rng(seed);
        let y = cvec(&mut r, 16);
        let params = SolverParams { rank: 3, max_iters, seed, ..SolverParams::default() };
        let res = solve_samples(&y, &params).unwrap();
        prop_assert!(res.iterations <= max_iters);
        prop_assert_eq!(res.iterations, res.trace.len());
        if res.converged {
            prop_assert!(res.final_rel_error().unwrap() <= params.delta);
        } else {
            prop_assert_eq!(res.iterations, max_iters);
        }
    }
}
