use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniformly sampled complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sampling_rate: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sampling_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        Ok(Self {
            samples,
            sampling_rate,
        })
    }

    pub fn zeros(len: usize, sampling_rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sampling_rate)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.samples)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sampling_rate: self.sampling_rate,
        }
    }

    /// Elementwise sum; both operands must share length and rate.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            sampling_rate: self.sampling_rate,
        })
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        if self.sampling_rate != other.sampling_rate {
            return Err(Error::RateMismatch(self.sampling_rate, other.sampling_rate));
        }
        Ok(())
    }
}

/// Euclidean norm of a complex vector.
pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Index of the first non-finite sample, if any.
pub fn first_non_finite(v: &[Complex64]) -> Option<usize> {
    v.iter().position(|z| !(z.re.is_finite() && z.im.is_finite()))
}
