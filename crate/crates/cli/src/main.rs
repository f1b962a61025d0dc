use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sparkle_core::harness::{
    cmd_evaluate, cmd_mitigate, cmd_range_profile, cmd_simulate, run_duration_sweep, run_montecarlo,
    write_montecarlo, write_sweep, AutoParams, ExperimentConfig, Method, MitigateOptions, MitigationConfig,
    SWEEP_SINR0_DB,
};
use sparkle_core::metrics::Window;
use sparkle_core::UnliftMode;

#[derive(Parser)]
#[command(name = "sparkle", version, about = "FMCW interference mitigation by sparse and low-rank Hankel decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a scenario and write its components as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
    },
    /// Separate a measurement into signal and interference.
    Mitigate(MitigateArgs),
    /// Score a recovered signal against the reference.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        /// Recovered signal.
        #[arg(long)]
        input: PathBuf,
        /// JSON report path.
        #[arg(long)]
        output: PathBuf,
    },
    /// Average SINR and correlation over seeded runs at several SINR0 levels.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// Comma-separated SINR0 levels in dB.
        #[arg(long, default_value = "-20,-10,0", allow_hyphen_values = true)]
        sinr0: String,
        /// Comma-separated methods.
        #[arg(long, default_value = "sparkle,rpca")]
        methods: String,
        #[command(flatten)]
        overrides: BatchOverrides,
        /// Output CSV table.
        #[arg(long)]
        output: PathBuf,
    },
    /// Average SINR and correlation against the contaminated fraction of the sweep.
    DurationSweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated contaminated fractions in (0, 1).
        #[arg(long)]
        durations: String,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value = "sparkle,rpca")]
        methods: String,
        /// SINR0 held fixed across the sweep, dB.
        #[arg(long, default_value_t = SWEEP_SINR0_DB, allow_hyphen_values = true)]
        sinr0: f64,
        #[command(flatten)]
        overrides: BatchOverrides,
        /// Output CSV table.
        #[arg(long)]
        output: PathBuf,
    },
    /// Range profile of a signal, with sweep and sampling taken from a scenario config.
    RangeProfile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// FFT length; next power of two at or above 4N by default.
        #[arg(long)]
        nfft: Option<usize>,
        #[arg(long, default_value = "rectangular")]
        window: Window,
        /// Output CSV.
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct MitigateArgs {
    /// Measurement CSV.
    #[arg(long)]
    input: PathBuf,
    /// JSON with `solver`, `rpca` and optionally `snr_db` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "sparkle")]
    method: Method,
    #[arg(long)]
    unlift_mode: Option<UnliftMode>,
    /// Seed for the solver's factor initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the recommended tau, beta0 and mu0 (sparkle only).
    #[arg(long)]
    auto_params: bool,
    /// SNR used by --auto-params; falls back to the config's `snr_db`.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    l0: f64,
    #[arg(long, default_value_t = 1.0)]
    l1: f64,
    #[arg(long, default_value_t = 1.0)]
    l2: f64,
    /// Clean reference; adds SINR and correlation to the report.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BatchOverrides {
    /// Base seed; defaults to the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    unlift_mode: Option<UnliftMode>,
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} {s:?}: {e}")))
        .collect()
}

fn load_experiment(path: &PathBuf, overrides: &BatchOverrides) -> Result<(ExperimentConfig, u64)> {
    let mut config = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(mode) = overrides.unlift_mode {
        config.solver.unlift_mode = mode;
    }
    let seed = overrides.seed.unwrap_or(config.scenario.seed);
    Ok((config, seed))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn mitigate(args: MitigateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => MitigationConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => MitigationConfig::default(),
    };
    if let Some(mode) = args.unlift_mode {
        config.solver.unlift_mode = mode;
    }
    if let Some(seed) = args.seed {
        config.solver.seed = seed;
    }
    let auto = if args.auto_params {
        let Some(snr_db) = args.snr_db.or(config.snr_db) else {
            bail!("--auto-params needs --snr-db or an `snr_db` entry in the config");
        };
        Some(AutoParams {
            snr_db,
            l0: args.l0,
            l1: args.l1,
            l2: args.l2,
        })
    } else {
        None
    };
    let opts = MitigateOptions {
        method: args.method,
        config,
        auto,
        reference: args.reference,
    };
    print_json(&cmd_mitigate(&args.input, &opts, &args.output)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, output } => {
            let config = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            print_json(&cmd_simulate(&config, &output)?)
        }
        Command::Mitigate(args) => mitigate(args),
        Command::Evaluate { reference, input, output } => print_json(&cmd_evaluate(&reference, &input, &output)?),
        Command::Montecarlo {
            config,
            runs,
            sinr0,
            methods,
            overrides,
            output,
        } => {
            let (config, seed) = load_experiment(&config, &overrides)?;
            let levels: Vec<f64> = parse_list(&sinr0, "SINR0 level")?;
            let methods: Vec<Method> = parse_list(&methods, "method")?;
            let rows = run_montecarlo(&config, runs, &levels, &methods, seed)?;
            write_montecarlo(&output, &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), output.display());
            Ok(())
        }
        Command::DurationSweep {
            config,
            durations,
            runs,
            methods,
            sinr0,
            overrides,
            output,
        } => {
            let (config, seed) = load_experiment(&config, &overrides)?;
            let fractions: Vec<f64> = parse_list(&durations, "duration")?;
            let methods: Vec<Method> = parse_list(&methods, "method")?;
            let rows = run_duration_sweep(&config, &fractions, &methods, runs, sinr0, seed)?;
            write_sweep(&output, &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), output.display());
            Ok(())
        }
        Command::RangeProfile {
            config,
            input,
            nfft,
            window,
            output,
        } => {
            let config = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let bins = cmd_range_profile(&input, &config.scenario, nfft, window, &output)?;
            eprintln!("wrote {bins} bins to {}", output.display());
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
