#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sparkle_core::hankel::default_shape;
use sparkle_core::{ComplexMatrix, SolverParams, SolverState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnormal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

pub fn cvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| cnormal(rng)).collect()
}

pub fn cmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    Mat::from_fn(rows, cols, |_, _| cnormal(rng))
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// `Σ conj(a_k) b_k`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(a, b)| a.conj() * b).sum()
}

pub fn frob_dot(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            acc += a[(r, c)].conj() * b[(r, c)];
        }
    }
    acc
}

pub fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<_> = a.iter().zip(b).map(|(a, b)| a - b).collect();
    vnorm(&d) / vnorm(b)
}

/// Sum of complex exponentials `Σ a_j e^{j2π f_j k}` with `f_j` in cycles per sample.
pub fn exponentials(n: usize, tones: &[(Complex64, f64)]) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            tones
                .iter()
                .map(|(a, f)| a * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * k as f64))
                .sum()
        })
        .collect()
}

pub const STEP: f64 = 1e-6;

pub struct Instance {
    pub y: Vec<Complex64>,
    pub tau: f64,
    pub state: SolverState,
}

pub fn instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let n = 6 + (seed % 7) as usize;
    let rank = 1 + (seed / 7 % 3) as usize;
    let shape = default_shape(n).unwrap();
    let y = cvec(&mut r, n);
    let params = SolverParams {
        rank,
        seed,
        ..SolverParams::default()
    };
    let mut state = SolverState::initialize(&y, shape, &params).unwrap();
    state.x = cvec(&mut r, n);
    state.i = cvec(&mut r, n);
    state.p = cvec(&mut r, n);
    state.u = cmat(&mut r, shape.rows(), rank);
    state.v = cmat(&mut r, shape.cols(), rank);
    state.q = cmat(&mut r, shape.rows(), shape.cols());
    state.beta = uniform(&mut r, 0.3, 3.0);
    state.mu = uniform(&mut r, 0.3, 3.0);
    Instance {
        y,
        tau: uniform(&mut r, 0.2, 1.5),
        state,
    }
}

/// τ‖i‖₁ + ½(‖U‖² + ‖V‖²) + Re⟨p, y−x−i⟩ + β/2‖y−x−i‖²
/// + Re⟨Q, H(x)−UVᴴ⟩ + μ/2‖H(x)−UVᴴ‖².
pub fn lagrangian(y: &[Complex64], tau: f64, s: &SolverState) -> f64 {
    let (m, n) = (s.q.nrows(), s.q.ncols());
    let mut total = tau * s.i.iter().map(|z| z.norm()).sum::<f64>();
    total += 0.5 * (s.u.norm_l2().powi(2) + s.v.norm_l2().powi(2));
    for k in 0..y.len() {
        let r = y[k] - s.x[k] - s.i[k];
        total += (s.p[k].conj() * r).re + 0.5 * s.beta * r.norm_sqr();
    }
    for c in 0..n {
        for row in 0..m {
            let mut uv = Complex64::new(0.0, 0.0);
            for j in 0..s.u.ncols() {
                uv += s.u[(row, j)] * s.v[(c, j)].conj();
            }
            let d = s.x[row + c] - uv;
            total += (s.q[(row, c)].conj() * d).re + 0.5 * s.mu * d.norm_sqr();
        }
    }
    total
}

/// Central differences of `f` along the real and imaginary part of each
/// coordinate exposed by `slot`.
pub fn fd_gradient(
    state: &SolverState,
    count: usize,
    mut slot: impl FnMut(&mut SolverState, usize) -> &mut Complex64,
    f: impl Fn(&SolverState) -> f64,
) -> Vec<Complex64> {
    let mut work = state.clone();
    (0..count)
        .map(|k| {
            let mut partial = |dir: Complex64| {
                let base = *slot(&mut work, k);
                *slot(&mut work, k) = base + dir * STEP;
                let up = f(&work);
                *slot(&mut work, k) = base - dir * STEP;
                let down = f(&work);
                *slot(&mut work, k) = base;
                (up - down) / (2.0 * STEP)
            };
            Complex64::new(partial(Complex64::new(1.0, 0.0)), partial(Complex64::new(0.0, 1.0)))
        })
        .collect()
}

pub fn matrix_slot(m: &mut ComplexMatrix, k: usize) -> &mut Complex64 {
    let rows = m.nrows();
    m.get_mut(k % rows, k / rows)
}
