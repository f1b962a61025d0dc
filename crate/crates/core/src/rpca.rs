//! Classic robust PCA on the lifted measurement, used as the comparison
//! baseline.
//!
//! The measurement is lifted once and split as `Y = X + T` with a nuclear
//! norm on `X` and an entrywise ℓ₁ norm on `T`, by alternating singular value
//! thresholding, soft thresholding and dual ascent. Signals are read back
//! from the first column and last row of each part; no Hankel structure is
//! re-imposed between iterations.

use std::time::Instant;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{lift, unlift_pick, ComplexMatrix, HankelShape};
use crate::signal::{first_non_finite, norm};
use crate::sparkle::{IterationRecord, SolverResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpcaParams {
    /// Sparsity weight; `1/√max(m, n)` when absent.
    pub tau: Option<f64>,
    /// Penalty on the data-consistency constraint.
    pub mu: f64,
    /// Growth factor applied to `mu` after each iteration (1 keeps it fixed).
    pub mu_growth: f64,
    /// Relative Frobenius residual at which iteration stops.
    pub delta: f64,
    pub max_iters: usize,
}

impl Default for RpcaParams {
    fn default() -> Self {
        Self {
            tau: None,
            mu: 0.05,
            mu_growth: 1.0,
            delta: 1e-6,
            max_iters: 300,
        }
    }
}

impl RpcaParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(tau) = self.tau {
            positive("tau", tau)?;
        }
        positive("mu", self.mu)?;
        positive("delta", self.delta)?;
        if !(self.mu_growth.is_finite() && self.mu_growth >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mu_growth must be at least 1, got {}",
                self.mu_growth
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_tau(&self, shape: HankelShape) -> f64 {
        self.tau
            .unwrap_or_else(|| 1.0 / (shape.rows().max(shape.cols()) as f64).sqrt())
    }
}

/// Singular value thresholding `U S_λ(Σ) Vᴴ`, the prox of `λ‖·‖_*`.
pub fn svt(m: &ComplexMatrix, lambda: f64) -> Result<ComplexMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(m.clone());
    }
    let svd = m.thin_svd().map_err(|_| Error::Svd)?;
    let s = svd.S().column_vector();
    let kept = (0..s.nrows()).take_while(|&j| s[j].re > lambda).count();
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    if kept == 0 {
        return Ok(out);
    }
    let u = svd.U();
    let scaled = Mat::from_fn(m.nrows(), kept, |r, j| u[(r, j)] * (s[j].re - lambda));
    matmul(
        out.as_mut(),
        Accum::Replace,
        scaled.as_ref(),
        svd.V().subcols(0, kept).adjoint(),
        Complex64::new(1.0, 0.0),
        Par::Seq,
    );
    Ok(out)
}

#[inline]
fn shrink(z: Complex64, lambda: f64) -> Complex64 {
    let mag = z.norm();
    if mag <= lambda {
        Complex64::new(0.0, 0.0)
    } else {
        z * ((mag - lambda) / mag)
    }
}

/// Decompose `H(y)` into low-rank `X` and sparse `T`; returns the picked
/// signals as `x` and `i` of a [`SolverResult`].
pub fn rpca_solve(y: &[Complex64], shape: HankelShape, params: &RpcaParams) -> Result<SolverResult> {
    let started = Instant::now();
    params.validate()?;
    if let Some(k) = first_non_finite(y) {
        return Err(Error::NonFinite(k));
    }
    let lifted = lift(y, shape)?;
    let (m, n) = (shape.rows(), shape.cols());
    let zero = Complex64::new(0.0, 0.0);
    if norm(y) == 0.0 {
        return Ok(SolverResult {
            x: vec![zero; y.len()],
            i: vec![zero; y.len()],
            iterations: 0,
            trace: Vec::new(),
            converged: true,
            wall_time: started.elapsed().as_secs_f64(),
        });
    }
    let tau = params.resolved_tau(shape);
    let y_norm = lifted.norm_l2();

    let mut x = Mat::<Complex64>::zeros(m, n);
    let mut t = Mat::<Complex64>::zeros(m, n);
    let mut q = Mat::<Complex64>::zeros(m, n);
    let mut work = Mat::<Complex64>::zeros(m, n);
    let mut mu = params.mu;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=params.max_iters {
        for c in 0..n {
            let (yc, tc, qc) = (lifted.col_as_slice(c), t.col_as_slice(c), q.col_as_slice(c));
            for (r, w) in work.col_as_slice_mut(c).iter_mut().enumerate() {
                *w = yc[r] - tc[r] + qc[r] / mu;
            }
        }
        x = svt(&work, 1.0 / mu)?;

        let mut residual = 0.0;
        for c in 0..n {
            let (yc, xc) = (lifted.col_as_slice(c), x.col_as_slice(c));
            let qc = q.col_as_slice_mut(c);
            let tc = t.col_as_slice_mut(c);
            for r in 0..m {
                tc[r] = shrink(yc[r] - xc[r] + qc[r] / mu, tau / mu);
                let d = yc[r] - xc[r] - tc[r];
                qc[r] += mu * d;
                residual += d.norm_sqr();
            }
        }
        let rel_error = residual.sqrt() / y_norm;
        trace.push(IterationRecord {
            iteration,
            rel_error,
            beta: None,
            mu,
        });
        if rel_error <= params.delta {
            converged = true;
            break;
        }
        mu *= params.mu_growth;
    }

    Ok(SolverResult {
        x: unlift_pick(&x),
        i: unlift_pick(&t),
        iterations: trace.len(),
        trace,
        converged,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
