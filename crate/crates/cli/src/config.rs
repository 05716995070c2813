//! Run parameters: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use nosig::audit::{PacketParams, Variant};
use nosig::optics::PhaseSetting;
use nosig::wavepacket::{DEFAULT_EXTENT_OVER_SIGMA, DEFAULT_POINTS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Option<String>,
    /// Phases: numbers in radians, or the strings "0" / "pi".
    pub phis: Option<Vec<serde_json::Value>>,
    pub phi_sweep: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub sigma: Option<f64>,
    pub extent_over_sigma: Option<f64>,
    pub n_points: Option<usize>,
    pub d_over_sigma: Option<f64>,
    pub halfwidth_over_sigma: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn phase_list(&self) -> anyhow::Result<Option<Vec<PhaseSetting<f64>>>> {
        let Some(v) = &self.phis else { return Ok(None) };
        v.iter()
            .map(|x| match x {
                serde_json::Value::Number(n) => Ok(PhaseSetting::new(n.as_f64().unwrap_or(f64::NAN))),
                serde_json::Value::String(s) => parse_phase(s),
                other => bail!("phase {other} is neither a number nor a string"),
            })
            .collect::<anyhow::Result<Vec<_>>>()
            .map(Some)
    }
}

/// `0`, `pi`, `-pi` or a value in radians.
pub fn parse_phase(s: &str) -> anyhow::Result<PhaseSetting<f64>> {
    match s.trim() {
        "0" => Ok(PhaseSetting::zero()),
        "pi" | "-pi" => Ok(PhaseSetting::pi()),
        t => {
            let x: f64 = t.parse().with_context(|| format!("bad phase `{s}`"))?;
            if !x.is_finite() {
                bail!("phase `{s}` is not finite");
            }
            Ok(PhaseSetting::new(x))
        }
    }
}

pub fn parse_variant(s: &str) -> anyhow::Result<Variant> {
    Ok(s.parse::<Variant>()?)
}

/// Flags shared by every command.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Output file (written atomically); standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed; the only source of randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Spatial grid and packet geometry, in units of σ.
#[derive(Args, Clone, Debug, Default)]
pub struct GridFlags {
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Half-extent of the grid.
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct GeometryFlags {
    #[arg(long)]
    pub d_over_sigma: Option<f64>,
    #[arg(long)]
    pub halfwidth_over_sigma: Option<f64>,
}

fn positive(name: &str, x: f64) -> anyhow::Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        bail!("--{name} must be positive and finite, got {x}");
    }
    Ok(x)
}

pub fn packet_params(grid: &GridFlags, geom: &GeometryFlags, file: &RunConfig) -> anyhow::Result<PacketParams<f64>> {
    let d = PacketParams::<f64>::default();
    Ok(PacketParams {
        sigma: positive("sigma", grid.sigma.or(file.sigma).unwrap_or(d.sigma))?,
        extent_over_sigma: positive(
            "extent",
            grid.extent
                .or(file.extent_over_sigma)
                .unwrap_or(DEFAULT_EXTENT_OVER_SIGMA),
        )?,
        n_points: grid.n_points.or(file.n_points).unwrap_or(DEFAULT_POINTS),
        d_over_sigma: positive(
            "d-over-sigma",
            geom.d_over_sigma.or(file.d_over_sigma).unwrap_or(d.d_over_sigma),
        )?,
        halfwidth_over_sigma: positive(
            "halfwidth-over-sigma",
            geom.halfwidth_over_sigma
                .or(file.halfwidth_over_sigma)
                .unwrap_or(d.halfwidth_over_sigma),
        )?,
    })
}
