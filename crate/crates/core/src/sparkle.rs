//! ADMM solver for the sparse plus low-rank Hankel decomposition.
//!
//! The measurement `y` is split into a beat signal `x`, whose Hankel lift is
//! kept close to a factored low-rank matrix `U Vᴴ`, and a time-sparse
//! interference `i`. The scaled augmented Lagrangian is
//!
//! ```text
//! ½(‖U‖²_F + ‖V‖²_F) + τ‖i‖₁ + β/2 ‖y − x − i + p/β‖² + μ/2 ‖H(x) − UVᴴ + Q/μ‖²_F
//! ```
//!
//! and every block update below has a closed form, so no SVD is needed. `β`
//! grows by `k_beta` every `beta_period` iterations and `μ` grows by `k_mu`
//! after every iteration.

use std::time::Instant;

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, Par, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{self, anti_diagonal_len, default_shape, ComplexMatrix, HankelShape, UnliftMode};
use crate::signal::{first_non_finite, norm, ComplexSignal};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the factors `U`, `V` are seeded before the first iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorInit {
    /// Seeded i.i.d. complex Gaussian entries.
    #[default]
    Random,
    /// Leading singular triplets of `H(y)`, split as `U Σ^½`, `V Σ^½`.
    TruncatedSvd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Weight of the ℓ₁ penalty on the interference.
    pub tau: f64,
    /// Initial data-consistency penalty.
    pub beta0: f64,
    /// Initial low-rank-consistency penalty.
    pub mu0: f64,
    pub k_beta: f64,
    pub k_mu: f64,
    /// Iterations between β increases.
    pub beta_period: usize,
    /// Relative residual ‖y − x − i‖/‖y‖ at which iteration stops.
    pub delta: f64,
    /// Number of columns of `U` and `V`.
    pub rank: usize,
    /// Lifting geometry; the near-square default is used when absent.
    pub shape: Option<HankelShape>,
    pub unlift_mode: UnliftMode,
    pub max_iters: usize,
    pub seed: u64,
    pub init: FactorInit,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tau: 0.02,
            beta0: 0.1,
            mu0: 0.02,
            k_beta: 1.6,
            k_mu: 1.2,
            beta_period: 10,
            delta: 1e-6,
            rank: 32,
            shape: None,
            unlift_mode: UnliftMode::Pick,
            max_iters: 500,
            seed: 0,
            init: FactorInit::Random,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        for (name, v) in [("tau", self.tau), ("beta0", self.beta0), ("mu0", self.mu0), ("delta", self.delta)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("k_beta", self.k_beta), ("k_mu", self.k_mu)] {
            if !(v.is_finite() && v >= 1.0) {
                return bad(format!("{name} must be at least 1, got {v}"));
            }
        }
        if self.beta_period == 0 {
            return bad("beta_period must be at least 1".into());
        }
        if self.rank == 0 {
            return bad("rank must be at least 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }

    /// Lifting geometry for a signal of `n_samples`.
    pub fn resolve_shape(&self, n_samples: usize) -> Result<HankelShape> {
        let shape = match self.shape {
            Some(s) => s,
            None => default_shape(n_samples)?,
        };
        if shape.len() != n_samples {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                got: n_samples,
            });
        }
        Ok(shape)
    }
}

/// Hyperparameters from the SNR and the spectral norm of `H(y)`:
/// `β₀ = l0 / 10^(SNR/10)`, `τ = l1 / √max(m, n)`, `μ₀ = 100·l2 / ‖H(y)‖₂`.
pub fn recommended_params(
    snr_db: f64,
    y_spectral_norm: f64,
    rows: usize,
    cols: usize,
    l0: f64,
    l1: f64,
    l2: f64,
) -> Result<SolverParams> {
    for (name, v) in [("l0", l0), ("l1", l1), ("l2", l2), ("spectral norm", y_spectral_norm)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("snr_db must be finite, got {snr_db}")));
    }
    Ok(SolverParams {
        beta0: l0 / 10f64.powf(snr_db / 10.0),
        tau: l1 / (rows.max(cols) as f64).sqrt(),
        mu0: 100.0 * l2 / y_spectral_norm,
        shape: Some(HankelShape::new(rows, cols)?),
        ..SolverParams::default()
    })
}

/// ADMM iterate. `u` is `m x rank`, `v` is `n x rank`, `q` is `m x n`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<Complex64>,
    pub i: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub q: ComplexMatrix,
    pub beta: f64,
    pub mu: f64,
    pub iter: usize,
}

impl SolverState {
    /// `x = i = p = 0`, `Q = 0`, factors per `params.init`.
    pub fn initialize(y: &[Complex64], shape: HankelShape, params: &SolverParams) -> Result<Self> {
        if y.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                got: y.len(),
            });
        }
        let (m, n, r) = (shape.rows(), shape.cols(), params.rank);
        let (u, v) = match params.init {
            FactorInit::Random => {
                let scale = (norm(y) / (y.len() * r) as f64).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                let mut draw = |rows: usize| {
                    Mat::from_fn(rows, r, |_, _| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(scale * re, scale * im)
                    })
                };
                let u = draw(m);
                let v = draw(n);
                (u, v)
            }
            FactorInit::TruncatedSvd => {
                let lifted = hankel::lift(y, shape)?;
                let svd = lifted.thin_svd().map_err(|_| Error::Svd)?;
                let s = svd.S().column_vector();
                let k = r.min(m).min(n);
                let root = |j: usize| if j < k { s[j].re.max(0.0).sqrt() } else { 0.0 };
                let u = Mat::from_fn(m, r, |a, j| if j < k { svd.U()[(a, j)] * root(j) } else { ZERO });
                let v = Mat::from_fn(n, r, |b, j| if j < k { svd.V()[(b, j)] * root(j) } else { ZERO });
                (u, v)
            }
        };
        Ok(Self {
            x: vec![ZERO; y.len()],
            i: vec![ZERO; y.len()],
            p: vec![ZERO; y.len()],
            u,
            v,
            q: Mat::zeros(m, n),
            beta: params.beta0,
            mu: params.mu0,
            iter: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.q.nrows()
    }

    pub fn cols(&self) -> usize {
        self.q.ncols()
    }

    /// ‖y − x − i‖ / ‖y‖.
    pub fn relative_error(&self, y: &[Complex64]) -> f64 {
        relative_residual(y, &self.x, &self.i)
    }
}

fn relative_residual(y: &[Complex64], x: &[Complex64], i: &[Complex64]) -> f64 {
    let r: f64 = y
        .iter()
        .zip(x)
        .zip(i)
        .map(|((y, x), i)| (y - x - i).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / norm(y)
}

/// `e^{j arg z} max(|z| − λ, 0)`, and 0 at `z = 0`.
pub fn soft_threshold_complex(z: Complex64, lambda: f64) -> Result<Complex64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be nonnegative, got {lambda}")));
    }
    Ok(shrink(z, lambda))
}

#[inline]
fn shrink(z: Complex64, lambda: f64) -> Complex64 {
    let mag = z.norm();
    if mag <= lambda || mag == 0.0 {
        ZERO
    } else {
        z * ((mag - lambda) / mag)
    }
}

/// `U Vᴴ`.
pub fn factor_product(u: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    let mut out = Mat::zeros(u.nrows(), v.nrows());
    factor_product_into(&mut out, u, v);
    out
}

fn factor_product_into(out: &mut ComplexMatrix, u: &ComplexMatrix, v: &ComplexMatrix) {
    matmul(out.as_mut(), Accum::Replace, u.as_ref(), v.adjoint(), ONE, Par::Seq);
}

/// Entries `(UVᴴ − Q/μ)[r, c]` along the first column and the last row,
/// accumulated term by term.
fn picked_target(u: &ComplexMatrix, v: &ComplexMatrix, q: &ComplexMatrix, mu: f64) -> Vec<Complex64> {
    let (m, n) = (q.nrows(), q.ncols());
    let entry = |r: usize, c: usize| {
        let mut acc = ZERO;
        for k in 0..u.ncols() {
            acc += u[(r, k)] * v[(c, k)].conj();
        }
        acc - q[(r, c)] / mu
    };
    (0..m).map(|r| entry(r, 0)).chain((1..n).map(|c| entry(m - 1, c))).collect()
}

fn x_update_pick(state: &SolverState, y: &[Complex64]) -> Vec<Complex64> {
    let (beta, mu) = (state.beta, state.mu);
    let target = picked_target(&state.u, &state.v, &state.q, mu);
    y.iter()
        .zip(&state.i)
        .zip(&state.p)
        .zip(&target)
        .map(|(((y, i), p), t)| (1.0 / (mu + beta)) * (beta * (y - i + p / beta) + mu * t))
        .collect()
}

/// Exact minimizer over `x`: anti-diagonal `k` of the lift holds `w_k`
/// copies of `x_k`, so `x_k = (β a_k + μ Σ_k) / (β + μ w_k)` where `Σ_k` is the
/// anti-diagonal sum of `UVᴴ − Q/μ`.
fn x_update_average(state: &SolverState, y: &[Complex64], uv: &ComplexMatrix) -> Vec<Complex64> {
    let (beta, mu) = (state.beta, state.mu);
    let (m, n) = (state.rows(), state.cols());
    let mut sums = vec![ZERO; y.len()];
    for c in 0..n {
        let uv_col = uv.col_as_slice(c);
        let q_col = state.q.col_as_slice(c);
        for r in 0..m {
            sums[r + c] += uv_col[r] - q_col[r] / mu;
        }
    }
    sums.iter()
        .enumerate()
        .map(|(k, s)| {
            let w = anti_diagonal_len(k, m, n) as f64;
            (beta * (y[k] - state.i[k] + state.p[k] / beta) + mu * s) / (beta + mu * w)
        })
        .collect()
}

/// x-update. In pick mode this is the closed form
/// `(1/(μ+β)) {β(y − i + p/β) + μ H†[UVᴴ − Q/μ]}` with `H†` reading the first
/// column and last row; in average mode it is the exact block minimizer.
pub fn update_x(state: &SolverState, y: &[Complex64], mode: UnliftMode) -> Vec<Complex64> {
    match mode {
        UnliftMode::Pick => x_update_pick(state, y),
        UnliftMode::Average => x_update_average(state, y, &factor_product(&state.u, &state.v)),
    }
}

/// `S_{τ/β}(y − x + p/β)` using the state's current `x`.
pub fn update_i(state: &SolverState, y: &[Complex64], tau: f64) -> Vec<Complex64> {
    let beta = state.beta;
    let lambda = tau / beta;
    y.iter()
        .zip(&state.x)
        .zip(&state.p)
        .map(|((y, x), p)| shrink(y - x + p / beta, lambda))
        .collect()
}

/// `H(x) + Q/μ`.
fn shifted_lift(x: &[Complex64], q: &ComplexMatrix, mu: f64) -> ComplexMatrix {
    let mut a = Mat::<Complex64>::zeros(q.nrows(), q.ncols());
    shifted_lift_into(&mut a, x, q, mu);
    a
}

fn shifted_lift_into(a: &mut ComplexMatrix, x: &[Complex64], q: &ComplexMatrix, mu: f64) {
    let (m, n) = (q.nrows(), q.ncols());
    for c in 0..n {
        let q_col = q.col_as_slice(c);
        let a_col = a.col_as_slice_mut(c);
        for r in 0..m {
            a_col[r] = x[r + c] + q_col[r] / mu;
        }
    }
}

/// `μ A F (I + μ FᴴF)⁻¹`; with `transpose` the adjoint `Aᴴ` is used.
fn factor_solve(a: &ComplexMatrix, transpose: bool, other: &ComplexMatrix, mu: f64) -> ComplexMatrix {
    let r = other.ncols();
    let mut gram = Mat::<Complex64>::identity(r, r);
    matmul(
        gram.as_mut(),
        Accum::Add,
        other.adjoint(),
        other.as_ref(),
        Complex64::new(mu, 0.0),
        Par::Seq,
    );
    let rows = if transpose { a.ncols() } else { a.nrows() };
    let mut rhs = Mat::<Complex64>::zeros(rows, r);
    let alpha = Complex64::new(mu, 0.0);
    if transpose {
        matmul(rhs.as_mut(), Accum::Replace, a.adjoint(), other.as_ref(), alpha, Par::Seq);
    } else {
        matmul(rhs.as_mut(), Accum::Replace, a.as_ref(), other.as_ref(), alpha, Par::Seq);
    }
    // I + μFᴴF is Hermitian positive definite, so Cholesky always succeeds.
    let llt = gram.llt(Side::Lower).expect("I + mu F^H F is positive definite");
    llt.rsolve(&rhs)
}

/// `U ← μ(H(x) + Q/μ) V (I + μVᴴV)⁻¹`.
pub fn update_u(state: &SolverState) -> ComplexMatrix {
    let a = shifted_lift(&state.x, &state.q, state.mu);
    factor_solve(&a, false, &state.v, state.mu)
}

/// `V ← μ(H(x) + Q/μ)ᴴ U (I + μUᴴU)⁻¹`.
pub fn update_v(state: &SolverState) -> ComplexMatrix {
    let a = shifted_lift(&state.x, &state.q, state.mu);
    factor_solve(&a, true, &state.u, state.mu)
}

fn ascend(state: &mut SolverState, y: &[Complex64], uv: &ComplexMatrix) {
    let beta = state.beta;
    for (((p, y), x), i) in state.p.iter_mut().zip(y).zip(&state.x).zip(&state.i) {
        *p += beta * (y - x - i);
    }
    let mu = state.mu;
    for c in 0..state.q.ncols() {
        let uv_col = uv.col_as_slice(c);
        let q_col = state.q.col_as_slice_mut(c);
        for (r, qv) in q_col.iter_mut().enumerate() {
            *qv += mu * (state.x[r + c] - uv_col[r]);
        }
    }
}

/// Dual ascent: `p ← p + β(y − x − i)`, `Q ← Q + μ(H(x) − UVᴴ)`.
pub fn update_multipliers(state: &SolverState, y: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix) {
    let mut next = state.clone();
    ascend(&mut next, y, &factor_product(&state.u, &state.v));
    (next.p, next.q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// ‖y − x − i‖/‖y‖ after the iteration.
    pub rel_error: f64,
    /// β used during the iteration; absent for solvers without one.
    pub beta: Option<f64>,
    /// μ used during the iteration.
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x: Vec<Complex64>,
    pub i: Vec<Complex64>,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

impl SolverResult {
    pub fn rel_error_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.rel_error).collect()
    }

    pub fn final_rel_error(&self) -> Option<f64> {
        self.trace.last().map(|r| r.rel_error)
    }
}

/// Run the ADMM iteration on `y` until the relative residual reaches
/// `params.delta` or `params.max_iters` iterations have run.
pub fn solve(y: &ComplexSignal, params: &SolverParams) -> Result<SolverResult> {
    solve_samples(y.samples(), params)
}

pub fn solve_samples(y: &[Complex64], params: &SolverParams) -> Result<SolverResult> {
    let started = Instant::now();
    params.validate()?;
    if y.is_empty() {
        return Err(Error::EmptySignal);
    }
    if let Some(k) = first_non_finite(y) {
        return Err(Error::NonFinite(k));
    }
    let shape = params.resolve_shape(y.len())?;
    if norm(y) == 0.0 {
        return Ok(SolverResult {
            x: vec![ZERO; y.len()],
            i: vec![ZERO; y.len()],
            iterations: 0,
            trace: Vec::new(),
            converged: true,
            wall_time: started.elapsed().as_secs_f64(),
        });
    }

    let mut state = SolverState::initialize(y, shape, params)?;
    let mut uv = factor_product(&state.u, &state.v);
    let mut a = Mat::<Complex64>::zeros(shape.rows(), shape.cols());
    let mut trace = Vec::new();
    let mut rel_error = state.relative_error(y);
    while rel_error > params.delta && state.iter < params.max_iters {
        state.iter += 1;
        if state.iter % params.beta_period == 0 {
            state.beta *= params.k_beta;
        }
        state.x = match params.unlift_mode {
            UnliftMode::Average => x_update_average(&state, y, &uv),
            UnliftMode::Pick => x_update_pick(&state, y),
        };
        state.i = update_i(&state, y, params.tau);

        shifted_lift_into(&mut a, &state.x, &state.q, state.mu);
        state.u = factor_solve(&a, false, &state.v, state.mu);
        state.v = factor_solve(&a, true, &state.u, state.mu);

        factor_product_into(&mut uv, &state.u, &state.v);
        ascend(&mut state, y, &uv);

        rel_error = state.relative_error(y);
        trace.push(IterationRecord {
            iteration: state.iter,
            rel_error,
            beta: Some(state.beta),
            mu: state.mu,
        });
        state.mu *= params.k_mu;
    }

    Ok(SolverResult {
        converged: rel_error <= params.delta,
        x: state.x,
        i: state.i,
        iterations: state.iter,
        trace,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
