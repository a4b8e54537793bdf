//! `biphoton`: simulate, extract and retrieve two-photon spatial states.

mod commands;
mod config;
mod error;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Mode;
use error::{CliError, EXIT_NUMERIC};

#[derive(Parser)]
#[command(name = "biphoton", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a state, propagate it to each plane and record coincidences.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Events sampled per plane.
        #[arg(long)]
        events: Option<u64>,
        /// Replace the configured planes with `z1` and `z2` (meters).
        #[arg(long, allow_hyphen_values = true)]
        z1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        z2: Option<f64>,
    },
    /// Recover pump and phasematching intensities from a CH1 histogram.
    Extract {
        histogram: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Band half-width in pixels.
        #[arg(long)]
        band: Option<usize>,
        /// Also write per-offset band totals.
        #[arg(long)]
        audit: bool,
    },
    /// Reconstruct a phase from intensities at two planes.
    Retrieve {
        i1: PathBuf,
        i2: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        z1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        z2: Option<f64>,
    },
    /// Fresnel-propagate a CF1 field from `z1` (default: its own plane) to `z2`.
    Propagate {
        field: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        z1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        z2: Option<f64>,
    },
    /// Run the fast built-in checks.
    Selftest,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BIPHOTON_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::config(format!("BIPHOTON_THREADS = {value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let written = match cli.command {
        Command::Simulate {
            common,
            seed,
            events,
            z1,
            z2,
        } => commands::simulate(&commands::SimulateArgs {
            config: common.config,
            seed,
            events,
            z1,
            z2,
            out: common.out,
        })?,
        Command::Extract {
            histogram,
            common,
            band,
            audit,
        } => commands::extract_cmd(&commands::ExtractArgs {
            histogram,
            config: common.config,
            band,
            audit,
            out: common.out,
        })?,
        Command::Retrieve {
            i1,
            i2,
            mode,
            common,
            seed,
            z1,
            z2,
        } => commands::retrieve(&commands::RetrieveArgs {
            i1,
            i2,
            mode,
            config: common.config,
            seed,
            z1,
            z2,
            out: common.out,
        })?,
        Command::Propagate {
            field,
            common,
            z1,
            z2,
        } => commands::propagate(&commands::PropagateArgs {
            field,
            config: common.config,
            z1,
            z2,
            out: common.out,
        })?,
        Command::Selftest => {
            return if selftest::run() {
                Ok(())
            } else {
                Err(CliError::numeric("selftest failed"))
            };
        }
    };
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code.clamp(1, EXIT_NUMERIC) as u8)
        }
    }
}
