//! Pinned tolerances for the acceptance suite in `tests/acceptance.rs`.

use std::path::{Path, PathBuf};

/// |P_receiver − 1/2| over every phase and variant.
pub const RECEIVER_TOL: f64 = 1e-12;
/// Receiver probability after any complete sender measurement.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Sender H/V against cos²(φ/2)/2 and sin²(φ/2)/2.
pub const MZ_TOL: f64 = 1e-10;
/// Sender H/V at φ = 0 and φ = π.
pub const MZ_EXACT_TOL: f64 = 1e-12;
pub const ISOMETRY_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-8;
/// Raw-Gaussian norm against √(1 + s cos φ).
pub const RAW_NORM_TOL: f64 = 1e-6;
pub const P_IN_CONSTRUCTIVE_MIN: f64 = 0.9;
pub const P_IN_DESTRUCTIVE_MAX: f64 = 0.1;
/// Destructive density at r = 0.
pub const NODE_TOL: f64 = 1e-12;
pub const MC_TRIALS: u64 = 100_000;
/// Three binomial standard deviations at p = 1/2, N = 10⁵.
pub const MC_BAND: f64 = 0.0047;
pub const CONVERGENCE_TOL: f64 = 1e-6;
pub const RANDOM_PARTITIONS: usize = 20;
pub const SWEEP: usize = 64;
pub const IDENTITY_BUDGET_SECS: u64 = 1;
pub const MONTE_CARLO_BUDGET_SECS: u64 = 10;

/// Bundled asset shipped with the command-line crate.
pub fn cli_asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/assets").join(name)
}
