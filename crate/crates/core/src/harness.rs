//! Whole experiments: simulation to files, mitigation of a measurement file,
//! scoring, Monte Carlo tables and the interference-duration sweep.
//!
//! Every random draw derives from the scenario `seed`. Noise for run `r` of a
//! batch uses `seed + r`; the solver factors use that value plus
//! [`SOLVER_SEED_OFFSET`].

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hankel::{lift, spectral_norm};
use crate::io::{read_json, read_signal, write_json, write_signal, write_trace};
use crate::metrics::{corr_coeff, default_nfft, range_profile, sinr, SinrMode, Window};
use crate::rpca::{rpca_solve, RpcaParams};
use crate::signal::ComplexSignal;
use crate::sim::{compose_measurement, scale_interference_to_sinr0, simulate, FmcwScenario, Simulation};
use crate::sparkle::{recommended_params, solve_samples, SolverParams, SolverResult};

pub const SOLVER_SEED_OFFSET: u64 = 0x5_0000;

/// Pre-mitigation SINR used by the duration sweep when none is given.
pub const SWEEP_SINR0_DB: f64 = -16.5;

/// A scenario plus the settings needed to run both solvers on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scenario: FmcwScenario,
    /// Rescale the interference so the measurement has this SINR.
    #[serde(default, with = "crate::serde_db::option", skip_serializing_if = "Option::is_none")]
    pub sinr0_db: Option<f64>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub rpca: RpcaParams,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.scenario.validate()?;
        config.solver.validate()?;
        config.rpca.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Solver settings for `mitigate`; any experiment config also parses as one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MitigationConfig {
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub rpca: RpcaParams,
    /// Only consulted for automatic hyperparameters.
    #[serde(default, with = "crate::serde_db::option", skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

impl MitigationConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sparkle,
    Rpca,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sparkle => "sparkle",
            Method::Rpca => "rpca",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparkle" => Ok(Self::Sparkle),
            "rpca" => Ok(Self::Rpca),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Run either solver on raw samples. The RPCA baseline lifts with the same
/// shape the sparkle solver would use.
pub fn run_method(
    y: &[Complex64],
    method: Method,
    solver: &SolverParams,
    rpca: &RpcaParams,
) -> Result<SolverResult> {
    match method {
        Method::Sparkle => solve_samples(y, solver),
        Method::Rpca => {
            if y.is_empty() {
                return Err(Error::EmptySignal);
            }
            rpca_solve(y, solver.resolve_shape(y.len())?, rpca)
        }
    }
}

/// Correlation coefficient as modulus and phase (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho {
    pub modulus: f64,
    pub phase: f64,
}

impl From<Complex64> for Rho {
    fn from(z: Complex64) -> Self {
        Self {
            modulus: z.norm(),
            phase: z.arg(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(with = "crate::serde_db")]
    pub sinr_db: f64,
    pub rho: Rho,
}

pub fn evaluate(reference: &[Complex64], recovered: &[Complex64]) -> Result<Evaluation> {
    Ok(Evaluation {
        sinr_db: sinr(reference, recovered, SinrMode::Post)?,
        rho: corr_coeff(reference, recovered)?.into(),
    })
}

/// Pre-mitigation SINR of `y` against the clean `reference`.
pub fn measurement_sinr(reference: &[Complex64], y: &[Complex64]) -> Result<f64> {
    if reference.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: y.len(),
        });
    }
    let corruption: Vec<_> = y.iter().zip(reference).map(|(a, b)| a - b).collect();
    sinr(reference, &corruption, SinrMode::Pre)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// SHA-256 of the processed measurement, as written to CSV.
    pub scenario_digest: String,
    pub method: Method,
    #[serde(with = "crate::serde_db::option")]
    pub sinr0_db: Option<f64>,
    #[serde(with = "crate::serde_db::option")]
    pub sinr_db: Option<f64>,
    pub rho: Option<Rho>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub converged: bool,
}

/// Hex SHA-256 of the CSV text of `samples`.
pub fn signal_digest(samples: &[Complex64]) -> Result<String> {
    let mut buf = Vec::new();
    crate::io::write_signal_to(&mut buf, samples)?;
    Ok(Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect())
}

/// Simulation with the interference already rescaled to the requested SINR₀.
#[derive(Debug, Clone)]
pub struct Realization {
    pub sim: Simulation,
    pub interference_scale: f64,
}

/// Simulate `scenario` with noise seed `seed`, optionally rescaling the
/// interference to `sinr0_db`.
pub fn realize(scenario: &FmcwScenario, seed: u64, sinr0_db: Option<f64>) -> Result<Realization> {
    let sim = simulate(scenario, seed)?;
    let Some(target) = sinr0_db else {
        return Ok(Realization {
            sim,
            interference_scale: 1.0,
        });
    };
    let alpha = scale_interference_to_sinr0(&sim.reference, &sim.interference, &sim.noise, target)?;
    let interference = sim.interference.scaled(alpha);
    let measurement = compose_measurement(&sim.reference, &interference, &sim.noise)?;
    Ok(Realization {
        sim: Simulation {
            interference,
            measurement,
            ..sim
        },
        interference_scale: alpha,
    })
}

/// Scenario echoed with the quantities derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedScenario {
    #[serde(flatten)]
    pub scenario: FmcwScenario,
    pub slope_hz_per_s: f64,
    pub sample_count: usize,
    pub sample_interval_s: f64,
    pub beat_frequencies_hz: Vec<f64>,
    pub residual_slopes_hz_per_s: Vec<f64>,
    pub burst_durations_s: Vec<f64>,
    pub contaminated_fraction: f64,
    pub interference_scale: f64,
    /// SINR of the written measurement; absent when the reference is zero.
    #[serde(with = "crate::serde_db::option")]
    pub sinr0_db: Option<f64>,
    pub measurement_digest: String,
}

pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<ResolvedScenario> {
    let scenario = &config.scenario;
    scenario.validate()?;
    let real = realize(scenario, scenario.seed, config.sinr0_db)?;
    let sim = &real.sim;
    std::fs::create_dir_all(out_dir)?;
    write_signal(&out_dir.join("reference.csv"), sim.reference.samples())?;
    write_signal(&out_dir.join("interference.csv"), sim.interference.samples())?;
    write_signal(&out_dir.join("noise.csv"), sim.noise.samples())?;
    write_signal(&out_dir.join("measurement.csv"), sim.measurement.samples())?;

    let sinr0_db = if sim.reference.norm() > 0.0 {
        Some(measurement_sinr(sim.reference.samples(), sim.measurement.samples())?)
    } else {
        None
    };
    let resolved = ResolvedScenario {
        scenario: scenario.clone(),
        slope_hz_per_s: scenario.slope(),
        sample_count: scenario.sample_count(),
        sample_interval_s: scenario.sample_interval(),
        beat_frequencies_hz: scenario.beat_frequencies(),
        residual_slopes_hz_per_s: scenario.interferers.iter().map(|it| scenario.residual_slope(it)).collect(),
        burst_durations_s: scenario
            .interferers
            .iter()
            .map(|it| 2.0 * scenario.burst_half_width(it))
            .collect(),
        contaminated_fraction: scenario.contaminated_fraction(),
        interference_scale: real.interference_scale,
        sinr0_db,
        measurement_digest: signal_digest(sim.measurement.samples())?,
    };
    write_json(&out_dir.join("scenario_resolved.json"), &resolved)?;
    Ok(resolved)
}

/// Multipliers for the recommended hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoParams {
    pub snr_db: f64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct MitigateOptions {
    pub method: Method,
    pub config: MitigationConfig,
    /// Replace τ, β₀ and μ₀ with the recommended values (sparkle only).
    pub auto: Option<AutoParams>,
    pub reference: Option<PathBuf>,
}

/// Apply the recommended τ, β₀, μ₀ for `y` on top of `base`.
pub fn auto_params(y: &[Complex64], base: &SolverParams, auto: AutoParams) -> Result<SolverParams> {
    let shape = base.resolve_shape(y.len())?;
    let norm = spectral_norm(&lift(y, shape)?);
    let rec = recommended_params(auto.snr_db, norm, shape.rows(), shape.cols(), auto.l0, auto.l1, auto.l2)?;
    Ok(SolverParams {
        tau: rec.tau,
        beta0: rec.beta0,
        mu0: rec.mu0,
        shape: Some(shape),
        ..base.clone()
    })
}

pub fn cmd_mitigate(input: &Path, opts: &MitigateOptions, out_dir: &Path) -> Result<RunReport> {
    let y = read_signal(input)?;
    let mut solver = opts.config.solver.clone();
    if let (Some(auto), Method::Sparkle) = (opts.auto, opts.method) {
        solver = auto_params(&y, &solver, auto)?;
    }
    let result = run_method(&y, opts.method, &solver, &opts.config.rpca)?;

    std::fs::create_dir_all(out_dir)?;
    write_signal(&out_dir.join("recovered.csv"), &result.x)?;
    write_signal(&out_dir.join("interference_est.csv"), &result.i)?;
    write_trace(&out_dir.join("trace.csv"), &result.trace)?;

    let (sinr0_db, sinr_db, rho) = match &opts.reference {
        Some(path) => {
            let reference = read_signal(path)?;
            let eval = evaluate(&reference, &result.x)?;
            (Some(measurement_sinr(&reference, &y)?), Some(eval.sinr_db), Some(eval.rho))
        }
        None => (None, None, None),
    };
    let report = RunReport {
        scenario_digest: signal_digest(&y)?,
        method: opts.method,
        sinr0_db,
        sinr_db,
        rho,
        iterations: result.iterations,
        wall_time_s: result.wall_time,
        converged: result.converged,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

pub fn cmd_evaluate(reference: &Path, recovered: &Path, out: &Path) -> Result<Evaluation> {
    let eval = evaluate(&read_signal(reference)?, &read_signal(recovered)?)?;
    write_json(out, &eval)?;
    Ok(eval)
}

/// Range profile of a signal file, sampled and swept as in `scenario`.
pub fn cmd_range_profile(
    input: &Path,
    scenario: &FmcwScenario,
    nfft: Option<usize>,
    window: Window,
    out: &Path,
) -> Result<usize> {
    let x = ComplexSignal::new(read_signal(input)?, scenario.sampling_rate)?;
    let nfft = nfft.unwrap_or_else(|| default_nfft(x.len()));
    let profile = range_profile(&x, scenario.slope(), nfft, window)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["range_m", "magnitude_db"])?;
    for bin in &profile {
        w.write_record([bin.range_m.to_string(), bin.magnitude_db.to_string()])?;
    }
    w.flush()?;
    Ok(profile.len())
}

/// Outcome of one seeded run inside a batch.
#[derive(Debug, Clone, Copy)]
struct RunOutcome {
    sinr_db: f64,
    rho: Complex64,
    iterations: usize,
    converged: bool,
}

fn run_seeded(
    scenario: &FmcwScenario,
    sinr0_db: f64,
    seed: u64,
    method: Method,
    config: &ExperimentConfig,
) -> Result<RunOutcome> {
    let real = realize(scenario, seed, Some(sinr0_db))?;
    let solver = SolverParams {
        seed: seed.wrapping_add(SOLVER_SEED_OFFSET),
        ..config.solver.clone()
    };
    let y = real.sim.measurement.samples();
    let result = run_method(y, method, &solver, &config.rpca)?;
    let reference = real.sim.reference.samples();
    Ok(RunOutcome {
        sinr_db: sinr(reference, &result.x, SinrMode::Post)?,
        rho: corr_coeff(reference, &result.x)?,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// Averages over the runs of one table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub runs: usize,
    pub mean_sinr_db: f64,
    /// Modulus and phase of the mean complex correlation coefficient.
    pub mean_rho_abs: f64,
    pub mean_rho_phase: f64,
    pub mean_iterations: f64,
    pub converged_runs: usize,
}

impl CellStats {
    fn from_runs(runs: &[RunOutcome]) -> Self {
        let n = runs.len() as f64;
        let rho = runs.iter().map(|r| r.rho).sum::<Complex64>() / n;
        Self {
            runs: runs.len(),
            mean_sinr_db: runs.iter().map(|r| r.sinr_db).sum::<f64>() / n,
            mean_rho_abs: rho.norm(),
            mean_rho_phase: rho.arg(),
            mean_iterations: runs.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            converged_runs: runs.iter().filter(|r| r.converged).count(),
        }
    }

    fn csv_fields(&self) -> [String; 6] {
        [
            self.runs.to_string(),
            self.mean_sinr_db.to_string(),
            self.mean_rho_abs.to_string(),
            self.mean_rho_phase.to_string(),
            self.mean_iterations.to_string(),
            self.converged_runs.to_string(),
        ]
    }
}

const STATS_COLUMNS: [&str; 6] = [
    "runs",
    "mean_sinr_db",
    "mean_rho_abs",
    "mean_rho_phase",
    "mean_iterations",
    "converged_runs",
];

/// Run `cells x runs` seeded jobs in parallel and average per cell.
fn run_batch<C: Sync>(
    cells: &[C],
    runs: usize,
    base_seed: u64,
    job: impl Fn(&C, u64) -> Result<RunOutcome> + Sync,
) -> Result<Vec<CellStats>> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let outcomes: Vec<RunOutcome> = (0..cells.len() * runs)
        .into_par_iter()
        .map(|k| job(&cells[k / runs], base_seed.wrapping_add((k % runs) as u64)))
        .collect::<Result<_>>()?;
    Ok(outcomes.chunks(runs).map(CellStats::from_runs).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub method: Method,
    pub sinr0_db: f64,
    #[serde(flatten)]
    pub stats: CellStats,
}

/// Averages over `runs` seeded realizations for every (method, SINR₀) pair,
/// sorted by method then SINR₀.
pub fn run_montecarlo(
    config: &ExperimentConfig,
    runs: usize,
    sinr0_levels: &[f64],
    methods: &[Method],
    base_seed: u64,
) -> Result<Vec<MonteCarloRow>> {
    config.scenario.validate()?;
    let mut cells: Vec<(Method, f64)> = methods
        .iter()
        .flat_map(|&m| sinr0_levels.iter().map(move |&s| (m, s)))
        .collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    cells.dedup();
    let stats = run_batch(&cells, runs, base_seed, |&(method, sinr0), seed| {
        run_seeded(&config.scenario, sinr0, seed, method, config)
    })?;
    Ok(cells
        .into_iter()
        .zip(stats)
        .map(|((method, sinr0_db), stats)| MonteCarloRow { method, sinr0_db, stats })
        .collect())
}

pub fn write_montecarlo(path: &Path, rows: &[MonteCarloRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["method", "sinr0_db"];
    header.extend(STATS_COLUMNS);
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![row.method.to_string(), row.sinr0_db.to_string()];
        record.extend(row.stats.csv_fields());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Copy of `base` whose interferers produce contiguous bursts that together
/// cover `fraction` of the sweep, centred in it.
///
/// Each interferer keeps its amplitude and the sign of its slope offset; the
/// slope magnitude is chosen so its burst spans `fraction / count` of the
/// sweep.
pub fn scenario_for_fraction(base: &FmcwScenario, fraction: f64) -> Result<FmcwScenario> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "contaminated fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let count = base.interferers.len();
    if count == 0 {
        return Err(Error::InvalidScenario("duration sweep needs at least one interferer".into()));
    }
    let t = base.sweep_time;
    let width = fraction * t / count as f64;
    let delta_k = 2.0 * (base.lpf_cutoff + base.lpf_transition) / width;
    let start = 0.5 * (1.0 - fraction) * t;
    let mut scenario = base.clone();
    for (j, it) in scenario.interferers.iter_mut().enumerate() {
        let sign = if it.slope_multiple < 1.0 { -1.0 } else { 1.0 };
        it.slope_multiple = 1.0 + sign * delta_k / base.slope().abs();
        it.center_time = start + (j as f64 + 0.5) * width;
    }
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    /// Fraction of samples actually inside a burst.
    pub actual_fraction: f64,
    pub method: Method,
    #[serde(flatten)]
    pub stats: CellStats,
}

/// Averages over `runs` seeded realizations for every (fraction, method)
/// pair at a fixed SINR₀, sorted by fraction then method.
pub fn run_duration_sweep(
    config: &ExperimentConfig,
    fractions: &[f64],
    methods: &[Method],
    runs: usize,
    sinr0_db: f64,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut fractions = fractions.to_vec();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let scenarios = fractions
        .iter()
        .map(|&f| scenario_for_fraction(&config.scenario, f))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, Method)> = (0..fractions.len())
        .flat_map(|k| methods.iter().map(move |&m| (k, m)))
        .collect();
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let stats = run_batch(&cells, runs, base_seed, |&(k, method), seed| {
        run_seeded(&scenarios[k], sinr0_db, seed, method, config)
    })?;
    Ok(cells
        .into_iter()
        .zip(stats)
        .map(|((k, method), stats)| SweepRow {
            fraction: fractions[k],
            actual_fraction: scenarios[k].contaminated_fraction(),
            method,
            stats,
        })
        .collect())
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["fraction", "actual_fraction", "method"];
    header.extend(STATS_COLUMNS);
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.fraction.to_string(),
            row.actual_fraction.to_string(),
            row.method.to_string(),
        ];
        record.extend(row.stats.csv_fields());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
