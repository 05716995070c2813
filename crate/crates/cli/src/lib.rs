//! Entry point of the `nosig` command: run the no-signalling audit, export
//! density profiles, validate circuit files and calibrate the packet
//! geometry.

mod commands;
mod config;
mod output;

use std::ffi::OsString;

use clap::{error::ErrorKind, Parser, Subcommand};

use config::{Common, GeometryFlags, GridFlags};

#[derive(Parser, Debug)]
#[command(name = "nosig", version, about = "Single-photon interferometer no-signalling audit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Receiver statistics over a sweep of sender phases.
    Audit {
        /// shiekh-density or mach-zehnder.
        #[arg(long)]
        variant: Option<String>,
        /// Number of equally spaced phases (0 and π are always added).
        #[arg(long)]
        phi_sweep: Option<usize>,
        /// Explicit phases instead of a sweep: 0, pi, or radians.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        geometry: GeometryFlags,
    },
    /// Position density after recombination, as CSV.
    Density {
        /// Extra phase column: 0, pi, or radians.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
        /// Calibration JSON as written by `calibrate`.
        #[arg(long)]
        calibration: Option<std::path::PathBuf>,
        /// Check normalization and the destructive node; exit 2 on failure.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        geometry: GeometryFlags,
    },
    /// Check that every element of a circuit file is an isometry.
    Validate {
        #[arg(long)]
        circuit: std::path::PathBuf,
    },
    /// Scan packet separation and window width for the best contrast.
    Calibrate {
        #[command(flatten)]
        grid: GridFlags,
    },
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FAIL: u8 = 2;

/// Runs one command line (program name first) and returns its exit status:
/// [`EXIT_PASS`], [`EXIT_USAGE`] for usage or configuration errors, or
/// [`EXIT_FAIL`] when the check ran and failed.
pub fn run<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
        }
    };
    let file = match config::RunConfig::load(cli.common.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let res = match cli.command {
        Command::Audit {
            variant,
            phi_sweep,
            phi,
            trials,
            grid,
            geometry,
        } => commands::audit(
            &cli.common,
            &file,
            commands::AuditArgs {
                variant,
                phi_sweep,
                phi,
                trials,
                grid,
                geometry,
            },
        ),
        Command::Density {
            phi,
            calibration,
            verify,
            grid,
            geometry,
        } => commands::density(
            &cli.common,
            &file,
            commands::DensityArgs {
                phi,
                calibration,
                verify,
                grid,
                geometry,
            },
        ),
        Command::Validate { circuit } => commands::validate(&cli.common, &file, &circuit),
        Command::Calibrate { grid } => commands::calibrate(&cli.common, &file, &grid),
    };
    match res {
        Ok(commands::Status::Pass) => EXIT_PASS,
        Ok(commands::Status::Fail) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
