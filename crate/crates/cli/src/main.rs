//! `nosig`: no-signalling audit, density export, circuit validation and
//! calibration.
//!
//! Exit status: 0 pass, 1 usage or configuration error, 2 the check ran and
//! failed.

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(nosig_cli::run(std::env::args_os()))
}
