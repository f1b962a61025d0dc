//! Dechirped FMCW scenario synthesis.
//!
//! A scenario describes one sweep of a deramping FMCW receiver: the point
//! targets that produce constant beat tones, the aggressor radars whose
//! chirps survive dechirping as short chirp-like bursts, and the thermal noise
//! level. Everything here is a pure function of the scenario and a seed.
//!
//! Sign convention: a target at range `R` contributes
//! `sigma * exp(-j 2 pi f_b t)` with `f_b = 2 R K_r / c`, where `K_r` is the
//! signed sweep slope (negative for a down-sweep).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

/// Propagation speed used for range/beat-frequency conversion (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    #[default]
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    /// Meters.
    pub range: f64,
    pub amplitude_magnitude: f64,
    /// Radians.
    #[serde(default)]
    pub amplitude_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererSpec {
    /// Aggressor slope as a multiple of the victim slope `K_r`.
    pub slope_multiple: f64,
    /// Instant (seconds from sweep start) at which the dechirped residual
    /// chirp crosses zero frequency. The phase is referenced here too.
    pub center_time: f64,
    pub amplitude_magnitude: f64,
    #[serde(default)]
    pub amplitude_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmcwScenario {
    /// Hz.
    pub center_frequency: f64,
    /// Seconds.
    pub sweep_time: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Cutoff of the anti-aliasing low-pass filter (Hz).
    pub lpf_cutoff: f64,
    /// Width of a raised-cosine roll-off above the cutoff (Hz). Zero gives
    /// the ideal brick-wall gate.
    #[serde(default)]
    pub lpf_transition: f64,
    /// Hz.
    pub sampling_rate: f64,
    #[serde(default)]
    pub sweep_direction: SweepDirection,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub interferers: Vec<InterfererSpec>,
    /// Thermal noise level; `"+inf"` disables noise.
    #[serde(with = "crate::serde_db", default = "infinite")]
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidScenario(format!("{name} must be positive and finite, got {v}")))
    }
}

impl FmcwScenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Self = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        positive("center_frequency", self.center_frequency)?;
        positive("sweep_time", self.sweep_time)?;
        positive("bandwidth", self.bandwidth)?;
        positive("lpf_cutoff", self.lpf_cutoff)?;
        positive("sampling_rate", self.sampling_rate)?;
        if !(self.lpf_transition.is_finite() && self.lpf_transition >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "lpf_transition must be nonnegative, got {}",
                self.lpf_transition
            )));
        }
        if self.lpf_cutoff + self.lpf_transition > 0.5 * self.sampling_rate {
            return Err(Error::InvalidScenario(format!(
                "low-pass edge {} Hz exceeds the Nyquist frequency {} Hz",
                self.lpf_cutoff + self.lpf_transition,
                0.5 * self.sampling_rate
            )));
        }
        let n = (self.sampling_rate * self.sweep_time).round();
        if n < 2.0 {
            return Err(Error::InvalidScenario(format!(
                "sweep holds {n} samples, need at least 2"
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidScenario(format!("snr_db must be finite or +inf, got {}", self.snr_db)));
        }
        for (idx, t) in self.targets.iter().enumerate() {
            positive(&format!("targets[{idx}].range"), t.range)?;
            if !(t.amplitude_magnitude.is_finite() && t.amplitude_magnitude >= 0.0) || !t.amplitude_phase.is_finite() {
                return Err(Error::InvalidScenario(format!("targets[{idx}] has an invalid amplitude")));
            }
            let fb = self.beat_frequency(t.range).abs();
            if fb >= self.lpf_cutoff {
                return Err(Error::InvalidScenario(format!(
                    "target {idx} at {} m has beat frequency {fb:.6e} Hz, not below the {:.6e} Hz low-pass cutoff",
                    t.range, self.lpf_cutoff
                )));
            }
        }
        for (idx, it) in self.interferers.iter().enumerate() {
            if !it.slope_multiple.is_finite() || it.slope_multiple == 1.0 {
                return Err(Error::InvalidScenario(format!(
                    "interferers[{idx}].slope_multiple must be finite and differ from 1, got {}",
                    it.slope_multiple
                )));
            }
            if !(0.0..=self.sweep_time).contains(&it.center_time) {
                return Err(Error::InvalidScenario(format!(
                    "interferers[{idx}].center_time {} lies outside the sweep",
                    it.center_time
                )));
            }
            if !(it.amplitude_magnitude.is_finite() && it.amplitude_magnitude >= 0.0) || !it.amplitude_phase.is_finite() {
                return Err(Error::InvalidScenario(format!("interferers[{idx}] has an invalid amplitude")));
            }
        }
        Ok(())
    }

    /// Signed sweep slope `K_r` in Hz/s.
    pub fn slope(&self) -> f64 {
        let k = self.bandwidth / self.sweep_time;
        match self.sweep_direction {
            SweepDirection::Up => k,
            SweepDirection::Down => -k,
        }
    }

    pub fn sample_count(&self) -> usize {
        (self.sampling_rate * self.sweep_time).round() as usize
    }

    pub fn sample_interval(&self) -> f64 {
        1.0 / self.sampling_rate
    }

    /// Signed beat frequency of a point target at `range` meters.
    pub fn beat_frequency(&self, range: f64) -> f64 {
        2.0 * range * self.slope() / SPEED_OF_LIGHT
    }

    pub fn beat_frequencies(&self) -> Vec<f64> {
        self.targets.iter().map(|t| self.beat_frequency(t.range)).collect()
    }

    /// Slope of the chirp an interferer leaves after dechirping.
    pub fn residual_slope(&self, interferer: &InterfererSpec) -> f64 {
        (interferer.slope_multiple - 1.0) * self.slope()
    }

    /// Half-length (seconds) of the window where an interferer is nonzero.
    pub fn burst_half_width(&self, interferer: &InterfererSpec) -> f64 {
        (self.lpf_cutoff + self.lpf_transition) / self.residual_slope(interferer).abs()
    }

    /// Per-sample flag: true where at least one interferer is nonzero.
    pub fn contamination_mask(&self) -> Vec<bool> {
        let n = self.sample_count();
        let dt = self.sample_interval();
        (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                self.interferers.iter().any(|it| {
                    it.amplitude_magnitude > 0.0
                        && lpf_gain(
                            (self.residual_slope(it) * (t - it.center_time)).abs(),
                            self.lpf_cutoff,
                            self.lpf_transition,
                        ) > 0.0
                })
            })
            .collect()
    }

    /// Fraction of sweep samples touched by interference.
    pub fn contaminated_fraction(&self) -> f64 {
        let mask = self.contamination_mask();
        mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
    }
}

/// Amplitude response of the anti-aliasing filter at instantaneous
/// frequency magnitude `f_abs`.
pub fn lpf_gain(f_abs: f64, cutoff: f64, transition: f64) -> f64 {
    if f_abs <= cutoff {
        1.0
    } else if transition > 0.0 && f_abs < cutoff + transition {
        0.5 * (1.0 + (PI * (f_abs - cutoff) / transition).cos())
    } else {
        0.0
    }
}

/// Clean beat signal of all targets.
pub fn synth_beat_signal(scenario: &FmcwScenario) -> Result<ComplexSignal> {
    scenario.validate()?;
    let n = scenario.sample_count();
    let dt = scenario.sample_interval();
    let tones: Vec<(Complex64, f64)> = scenario
        .targets
        .iter()
        .map(|t| {
            (
                Complex64::from_polar(t.amplitude_magnitude, t.amplitude_phase),
                scenario.beat_frequency(t.range),
            )
        })
        .collect();
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            tones
                .iter()
                .map(|(amp, fb)| amp * Complex64::from_polar(1.0, -2.0 * PI * fb * t))
                .sum()
        })
        .collect();
    ComplexSignal::new(samples, scenario.sampling_rate)
}

/// One interferer after dechirping and low-pass filtering: a residual chirp
/// gated to the filter passband.
pub fn synth_interference(scenario: &FmcwScenario, which: usize) -> Result<ComplexSignal> {
    scenario.validate()?;
    let it = scenario.interferers.get(which).ok_or(Error::InterfererIndex {
        index: which,
        count: scenario.interferers.len(),
    })?;
    let n = scenario.sample_count();
    let dt = scenario.sample_interval();
    let dk = scenario.residual_slope(it);
    let samples = (0..n)
        .map(|k| {
            let tau = k as f64 * dt - it.center_time;
            let gain = lpf_gain((dk * tau).abs(), scenario.lpf_cutoff, scenario.lpf_transition);
            if gain == 0.0 || it.amplitude_magnitude == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(
                    gain * it.amplitude_magnitude,
                    PI * dk * tau * tau + it.amplitude_phase,
                )
            }
        })
        .collect();
    ComplexSignal::new(samples, scenario.sampling_rate)
}

/// Sum of every interferer in the scenario (zero when there are none).
pub fn synth_total_interference(scenario: &FmcwScenario) -> Result<ComplexSignal> {
    let mut total = ComplexSignal::zeros(scenario.sample_count(), scenario.sampling_rate)?;
    for which in 0..scenario.interferers.len() {
        total = total.try_add(&synth_interference(scenario, which)?)?;
    }
    Ok(total)
}

/// Circular white Gaussian noise scaled so that `‖x‖²/‖n‖²` is exactly
/// `snr_db`. Returns the noise vector only.
pub fn add_noise(x: &ComplexSignal, snr_db: f64, seed: u64) -> Result<ComplexSignal> {
    if snr_db == f64::INFINITY {
        return ComplexSignal::zeros(x.len(), x.sampling_rate());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("snr_db must be finite or +inf, got {snr_db}")));
    }
    let signal_norm = x.norm();
    if signal_norm == 0.0 {
        return Err(Error::ZeroSignal("reference"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw: Vec<Complex64> = (0..x.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let drawn = crate::signal::norm(&draw);
    let wanted = signal_norm * 10f64.powf(-snr_db / 20.0);
    let scale = wanted / drawn;
    for z in &mut draw {
        *z *= scale;
    }
    ComplexSignal::new(draw, x.sampling_rate())
}

/// Scale factor `alpha >= 0` with `20 log10(‖x‖ / ‖alpha i + n‖) = target_sinr0`.
pub fn scale_interference_to_sinr0(
    x: &ComplexSignal,
    i: &ComplexSignal,
    n: &ComplexSignal,
    target_sinr0: f64,
) -> Result<f64> {
    x.check_compatible(i)?;
    x.check_compatible(n)?;
    if !target_sinr0.is_finite() {
        return Err(Error::InvalidParameter(format!("target SINR0 must be finite, got {target_sinr0}")));
    }
    let i_norm2 = i.norm().powi(2);
    if i_norm2 == 0.0 {
        return Err(Error::ZeroSignal("interference"));
    }
    let x_norm = x.norm();
    if x_norm == 0.0 {
        return Err(Error::ZeroSignal("reference"));
    }
    let budget = x_norm * 10f64.powf(-target_sinr0 / 20.0);
    // ‖αi + n‖² = α²‖i‖² + 2α Re⟨i, n⟩ + ‖n‖²
    let cross: f64 = i
        .samples()
        .iter()
        .zip(n.samples())
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    let a = i_norm2;
    let b = 2.0 * cross;
    let c = n.norm().powi(2) - budget * budget;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::UnreachableSinr0 { target_db: target_sinr0 });
    }
    let alpha = (-b + disc.sqrt()) / (2.0 * a);
    if alpha < 0.0 {
        return Err(Error::UnreachableSinr0 { target_db: target_sinr0 });
    }
    Ok(alpha)
}

/// `y = x + i + n`.
pub fn compose_measurement(x: &ComplexSignal, i: &ComplexSignal, n: &ComplexSignal) -> Result<ComplexSignal> {
    x.try_add(i)?.try_add(n)
}

/// Every component of one synthesized sweep.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub reference: ComplexSignal,
    pub interference: ComplexSignal,
    pub noise: ComplexSignal,
    pub measurement: ComplexSignal,
}

/// Synthesize a full sweep; noise is drawn with `noise_seed`.
pub fn simulate(scenario: &FmcwScenario, noise_seed: u64) -> Result<Simulation> {
    let reference = synth_beat_signal(scenario)?;
    let interference = synth_total_interference(scenario)?;
    let noise = add_noise(&reference, scenario.snr_db, noise_seed)?;
    let measurement = compose_measurement(&reference, &interference, &noise)?;
    Ok(Simulation {
        reference,
        interference,
        noise,
        measurement,
    })
}
