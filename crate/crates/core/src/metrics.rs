//! Recovery quality metrics and range profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{norm, ComplexSignal};
use crate::sim::SPEED_OF_LIGHT;

/// Lowest magnitude reported by [`range_profile`], in dB.
pub const DB_FLOOR: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrMode {
    /// Second argument is the corruption `i + n`.
    Pre,
    /// Second argument is the estimate `ŝ`; the error is `s − ŝ`.
    Post,
}

/// `20 log10(‖s‖ / ‖e‖)` where `e` is the corruption (pre) or `s − ŝ` (post).
/// A zero error gives `+inf`.
pub fn sinr(reference: &[Complex64], other: &[Complex64], mode: SinrMode) -> Result<f64> {
    if reference.len() != other.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: other.len(),
        });
    }
    let s = norm(reference);
    if s == 0.0 {
        return Err(Error::ZeroSignal("reference"));
    }
    let err = match mode {
        SinrMode::Pre => norm(other),
        SinrMode::Post => reference
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt(),
    };
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (s / err).log10())
}

/// `ρ = ŝᴴ s / (‖s‖ ‖ŝ‖)`.
pub fn corr_coeff(reference: &[Complex64], estimate: &[Complex64]) -> Result<Complex64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    let (ns, ne) = (norm(reference), norm(estimate));
    if ns == 0.0 {
        return Err(Error::ZeroSignal("reference"));
    }
    if ne == 0.0 {
        return Err(Error::ZeroSignal("estimate"));
    }
    let inner: Complex64 = estimate.iter().zip(reference).map(|(e, s)| e.conj() * s).sum();
    Ok(inner / (ns * ne))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" | "rect" => Ok(Self::Rectangular),
            "hann" => Ok(Self::Hann),
            other => Err(Error::InvalidParameter(format!("unknown window {other:?}"))),
        }
    }
}

fn window_weights(len: usize, window: Window) -> Vec<f64> {
    match window {
        Window::Rectangular => vec![1.0; len],
        Window::Hann if len == 1 => vec![1.0],
        Window::Hann => (0..len)
            .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / (len - 1) as f64).cos()))
            .collect(),
    }
}

/// Next power of two at or above `4 * len`.
pub fn default_nfft(len: usize) -> usize {
    (4 * len).next_power_of_two()
}

/// Zero-padded spectrum `S[b] = Σ_k w_k x_k e^{+j2π bk/nfft}`.
///
/// The positive exponent matches the `e^{-j2π f_b t}` beat convention, so a
/// target with beat frequency `f_b` peaks at bin `f_b·nfft/f_s`.
pub fn spectrum(x: &[Complex64], nfft: usize, window: Window) -> Result<Vec<Complex64>> {
    if nfft < x.len() {
        return Err(Error::InvalidParameter(format!(
            "nfft {nfft} is smaller than the signal length {}",
            x.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for ((dst, src), w) in buf.iter_mut().zip(x).zip(window_weights(x.len(), window)) {
        *dst = src * w;
    }
    FftPlanner::new().plan_fft_inverse(nfft).process(&mut buf);
    Ok(buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBin {
    pub range_m: f64,
    pub magnitude_db: f64,
}

/// Spectrum magnitude in dB against range `r = c f / (2 K_r)`, for the half
/// of the spectrum that maps to nonnegative range.
pub fn range_profile(x: &ComplexSignal, slope: f64, nfft: usize, window: Window) -> Result<Vec<RangeBin>> {
    if !(slope.is_finite() && slope != 0.0) {
        return Err(Error::InvalidParameter(format!("sweep slope must be nonzero, got {slope}")));
    }
    let spec = spectrum(x.samples(), nfft, window)?;
    let fs = x.sampling_rate();
    Ok((0..nfft.div_ceil(2))
        .map(|b| {
            let f = slope.signum() * b as f64 * fs / nfft as f64;
            let idx = if slope > 0.0 { b } else { (nfft - b) % nfft };
            let mag = spec[idx].norm();
            let db = if mag > 0.0 { (20.0 * mag.log10()).max(DB_FLOOR) } else { DB_FLOOR };
            RangeBin {
                range_m: SPEED_OF_LIGHT * f / (2.0 * slope),
                magnitude_db: db,
            }
        })
        .collect())
}
