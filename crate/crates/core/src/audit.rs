//! Receiver statistics under every sender choice.
//!
//! The photon starts in (|h+⟩ + |h−⟩)/√2. The sender owns the `h+` branch
//! and may run it through the interferometer with any phase and measure it
//! with any complete set of counters; the receiver watches `h−`. Because the
//! sender only ever acts on the `h+` branch, the weight of `h−` never moves.
//! This module computes that weight analytically, after sender measurement,
//! and by Monte Carlo sampling, and collects the results in an
//! [`AuditReport`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    binomial_band, outcome_probabilities, probability, reduce, sample_counts, Measurable, Projector, ProjectorSet,
    ZERO_NORM_EPS,
};
use crate::mode::{label, ModeState};
use crate::optics::{mz_output, PhaseSetting, MODE_H, MODE_IN, MODE_V};
use crate::scalar::{re, Real};
use crate::wavepacket::{
    gaussian, orthogonal_pair, recombine, DetectorWindow, Grid, PacketPair, WaveFunction, DEFAULT_D_OVER_SIGMA,
    DEFAULT_EXTENT_OVER_SIGMA, DEFAULT_HALFWIDTH_OVER_SIGMA, DEFAULT_POINTS,
};

/// Mode label of the receiver's branch.
pub const RECEIVER_MODE: &str = "h-";
/// Outcome label of the receiver's counter.
pub const RECEIVER: &str = "receiver";
/// Tolerance on |P_receiver − 1/2| for the analytic verdict.
pub const ANALYTIC_TOL: f64 = 1e-12;
/// Default sweep size (before adding the exact points 0 and π).
pub const DEFAULT_SWEEP: usize = 64;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Arms recombined side by side; the sender watches a window on `r`.
    ShiekhDensity,
    /// Arms closed by a second splitter; the sender watches `H` and `V`.
    MachZehnder,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::ShiekhDensity => "shiekh-density",
            Self::MachZehnder => "mach-zehnder",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shiekh-density" => Ok(Self::ShiekhDensity),
            "mach-zehnder" => Ok(Self::MachZehnder),
            other => Err(Error::Parameter(format!(
                "unknown variant `{other}` (expected shiekh-density or mach-zehnder)"
            ))),
        }
    }
}

/// Spatial parameters, all in units of the packet width σ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketParams<T: Real> {
    pub sigma: T,
    pub extent_over_sigma: T,
    pub n_points: usize,
    pub d_over_sigma: T,
    pub halfwidth_over_sigma: T,
}

impl<T: Real> Default for PacketParams<T> {
    fn default() -> Self {
        Self {
            sigma: T::one(),
            extent_over_sigma: T::lit(DEFAULT_EXTENT_OVER_SIGMA),
            n_points: DEFAULT_POINTS,
            d_over_sigma: T::lit(DEFAULT_D_OVER_SIGMA),
            halfwidth_over_sigma: T::lit(DEFAULT_HALFWIDTH_OVER_SIGMA),
        }
    }
}

impl<T: Real> PacketParams<T> {
    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::symmetric(self.sigma, self.extent_over_sigma, self.n_points)
    }

    pub fn pair(&self) -> Result<PacketPair<T>> {
        orthogonal_pair(&self.grid()?, self.d_over_sigma * self.sigma, self.sigma)
    }

    pub fn window(&self) -> Result<DetectorWindow<T>> {
        let g = self.grid()?;
        let w = DetectorWindow::centered(g.center(), self.halfwidth_over_sigma * self.sigma)?;
        w.check_within(&g)?;
        Ok(w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig<T: Real> {
    pub variant: Variant,
    pub phis: Vec<PhaseSetting<T>>,
    pub trials: u64,
    pub seed: u64,
    pub packet: PacketParams<T>,
}

impl<T: Real> ScenarioConfig<T> {
    /// 64-point sweep plus 0 and π, 10⁵ trials, seed 0, default packets.
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            phis: PhaseSetting::sweep_with_canonical(DEFAULT_SWEEP),
            trials: DEFAULT_TRIALS,
            seed: 0,
            packet: PacketParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.phis.is_empty() {
            return Err(Error::Parameter("phase list is empty".into()));
        }
        Ok(())
    }
}

/// State of the sender's branch.
#[derive(Clone, Debug, PartialEq)]
pub enum Branch<T: Real> {
    Modes(ModeState<T>),
    Packet(WaveFunction<T>),
}

impl<T: Real> Branch<T> {
    pub fn norm_sqr(&self) -> T {
        match self {
            Self::Modes(s) => s.norm_sqr(),
            Self::Packet(w) => w.norm_sqr(),
        }
    }
}

/// minus·|h−⟩ + plus·|branch⟩ with the two terms orthogonal by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState<T: Real> {
    minus_amplitude: Complex<T>,
    plus_amplitude: Complex<T>,
    plus_branch: Branch<T>,
}

impl<T: Real> CompositeState<T> {
    pub fn new(minus_amplitude: Complex<T>, plus_amplitude: Complex<T>, plus_branch: Branch<T>) -> Self {
        Self {
            minus_amplitude,
            plus_amplitude,
            plus_branch,
        }
    }

    pub fn minus_amplitude(&self) -> Complex<T> {
        self.minus_amplitude
    }

    pub fn plus_amplitude(&self) -> Complex<T> {
        self.plus_amplitude
    }

    pub fn plus_branch(&self) -> &Branch<T> {
        &self.plus_branch
    }

    /// (|h−|², |plus|²·‖branch‖²).
    pub fn branch_weights(&self) -> (T, T) {
        (
            self.minus_amplitude.norm_sqr(),
            self.plus_amplitude.norm_sqr() * self.plus_branch.norm_sqr(),
        )
    }
}

impl<T: Real> Measurable<T> for CompositeState<T> {
    fn norm_sqr(&self) -> T {
        let (m, p) = self.branch_weights();
        m + p
    }

    fn project(&self, p: &Projector<T>) -> Result<Self> {
        let receiver = label(RECEIVER_MODE);
        let minus = if p.mode_set().contains(&receiver) {
            self.minus_amplitude
        } else {
            re(T::zero())
        };
        let branch = match &self.plus_branch {
            Branch::Modes(s) => {
                if !p.window_list().is_empty() {
                    return Err(Error::Domain(format!(
                        "window projector `{}` applied to a discrete-mode branch",
                        p.label()
                    )));
                }
                Branch::Modes(s.restrict(|l| p.mode_set().contains(l)))
            }
            Branch::Packet(w) => {
                if let Some(l) = p.mode_set().iter().find(|l| **l != receiver) {
                    return Err(Error::Domain(format!(
                        "mode `{l}` of projector `{}` does not exist on a packet branch",
                        p.label()
                    )));
                }
                Branch::Packet(w.project(p.window_list())?)
            }
        };
        Ok(Self::new(minus, self.plus_amplitude, branch))
    }

    fn rescale(&self, k: T) -> Self {
        Self::new(
            self.minus_amplitude * k,
            self.plus_amplitude * k,
            self.plus_branch.clone(),
        )
    }
}

/// The receiver's counter.
pub fn receiver_projector<T: Real>() -> Projector<T> {
    Projector::modes(RECEIVER, [label(RECEIVER_MODE)])
}

/// Prepared scenario: variant plus the packet geometry it needs.
#[derive(Clone, Debug)]
pub struct Scenario<T: Real> {
    variant: Variant,
    packet: PacketParams<T>,
    pair: Option<PacketPair<T>>,
    window: Option<DetectorWindow<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn new(variant: Variant, packet: PacketParams<T>) -> Result<Self> {
        let (pair, window) = match variant {
            Variant::ShiekhDensity => (Some(packet.pair()?), Some(packet.window()?)),
            Variant::MachZehnder => (None, None),
        };
        Ok(Self {
            variant,
            packet,
            pair,
            window,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn pair(&self) -> Option<&PacketPair<T>> {
        self.pair.as_ref()
    }

    pub fn window(&self) -> Option<&DetectorWindow<T>> {
        self.window.as_ref()
    }

    /// (|h+⟩ + |h−⟩)/√2 with |h+⟩ as a mode or as the incoming packet.
    pub fn build_initial(&self) -> Result<CompositeState<T>> {
        let k = re(T::frac_1_sqrt_2());
        let branch = match self.variant {
            Variant::MachZehnder => Branch::Modes(ModeState::basis(label(MODE_IN))),
            Variant::ShiekhDensity => {
                let g = self.packet.grid()?;
                Branch::Packet(gaussian(&g, g.center(), self.packet.sigma)?)
            }
        };
        Ok(CompositeState::new(k, k, branch))
    }

    /// Replaces the sender's branch with the interferometer output for `phi`.
    /// The receiver amplitude is carried over untouched.
    pub fn evolve_sender(&self, s: &CompositeState<T>, phi: PhaseSetting<T>) -> CompositeState<T> {
        let branch = match (&self.variant, &self.pair) {
            (Variant::MachZehnder, _) => Branch::Modes(mz_output(phi)),
            (Variant::ShiekhDensity, Some(pair)) => Branch::Packet(recombine(pair, phi)),
            (Variant::ShiekhDensity, None) => unreachable!("packet scenario without a pair"),
        };
        CompositeState::new(s.minus_amplitude, s.plus_amplitude, branch)
    }

    /// The sender's counters: `in`/`out` around the window, or `H`/`V`.
    pub fn sender_set(&self) -> Result<ProjectorSet<T>> {
        match self.variant {
            Variant::MachZehnder => ProjectorSet::new(vec![
                Projector::modes(MODE_H, [label(MODE_H)]),
                Projector::modes(MODE_V, [label(MODE_V)]),
            ]),
            Variant::ShiekhDensity => {
                let g = self.packet.grid()?;
                crate::measurement::in_out_partition(*self.window.as_ref().expect("window"), &g)
            }
        }
    }

    /// Sender counters plus the receiver counter.
    pub fn global_set(&self) -> Result<ProjectorSet<T>> {
        self.sender_set()?.extended(receiver_projector())
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        self.packet.grid()
    }
}

/// |h−|², the receiver's detection probability.
pub fn receiver_probability<T: Real>(s: &CompositeState<T>) -> T {
    s.minus_amplitude.norm_sqr()
}

/// Σ_k P(k)·P(receiver | reduced by k) over the sender's outcomes extended
/// by the receiver's counter.
pub fn receiver_probability_after_sender_measurement<T: Real>(
    s: &CompositeState<T>,
    sender_set: &ProjectorSet<T>,
) -> Result<T> {
    let global = sender_set.extended(receiver_projector())?;
    let probs = outcome_probabilities(s, &global)?;
    let rx = receiver_projector();
    let mut total = T::zero();
    for (p, prob) in global.projectors().iter().zip(probs) {
        if prob < T::lit(ZERO_NORM_EPS) {
            continue;
        }
        let reduced = reduce(s, p)?;
        total = total + prob * probability(&reduced, &rx)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub phi: f64,
    /// Joint probability of each sender counter firing.
    pub sender: BTreeMap<String, f64>,
    pub receiver_analytic: f64,
    pub receiver_empirical: f64,
    pub trials: u64,
    pub counts: BTreeMap<String, u64>,
    /// Seed of the Monte Carlo run reported in `counts`.
    pub seed: u64,
    pub retried: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub variant: Variant,
    pub rows: Vec<AuditRow>,
    pub max_deviation: f64,
    pub verdict: Verdict,
}

/// Monte Carlo record for one phase, as written by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRecord {
    pub phi: f64,
    pub counts: BTreeMap<String, u64>,
    pub trials: u64,
    pub seed: u64,
}

impl AuditRow {
    pub fn monte_carlo(&self) -> MonteCarloRecord {
        MonteCarloRecord {
            phi: self.phi,
            counts: self.counts.clone(),
            trials: self.trials,
            seed: self.seed,
        }
    }
}

fn empirical_ok(count: u64, trials: u64) -> bool {
    (count as f64 / trials as f64 - 0.5).abs() <= binomial_band(0.5, trials)
}

/// Runs every phase of `config` and grades the receiver's statistics.
///
/// Verdict passes iff max |P_receiver − 1/2| ≤ 1e-12 and every empirical
/// receiver frequency lies within three binomial standard deviations of
/// 1/2. A row outside the band is rerun once with the next seed.
pub fn no_signalling_audit<T: Real>(config: &ScenarioConfig<T>) -> Result<AuditReport> {
    config.validate()?;
    let scenario = Scenario::new(config.variant, config.packet)?;
    let initial = scenario.build_initial()?;
    let global = scenario.global_set()?;
    let rows = config
        .phis
        .par_iter()
        .enumerate()
        .map(|(idx, phi)| -> Result<AuditRow> {
            let evolved = scenario.evolve_sender(&initial, *phi);
            let probs = outcome_probabilities(&evolved, &global)?;
            let labels: Vec<String> = global.labels().map(str::to_string).collect();
            let sender = labels
                .iter()
                .zip(&probs)
                .filter(|(l, _)| l.as_str() != RECEIVER)
                .map(|(l, p)| (l.clone(), p.as_f64()))
                .collect();
            let pf: Vec<f64> = probs.iter().map(|p| p.as_f64()).collect();
            let rx = labels.iter().position(|l| l == RECEIVER).expect("receiver outcome");
            let mut seed = config.seed;
            let mut counts = sample_counts(&pf, seed, idx as u64, config.trials);
            let mut retried = false;
            if !empirical_ok(counts[rx], config.trials) {
                retried = true;
                seed = config.seed.wrapping_add(1);
                counts = sample_counts(&pf, seed, idx as u64, config.trials);
            }
            Ok(AuditRow {
                phi: phi.radians().as_f64(),
                sender,
                receiver_analytic: receiver_probability(&evolved).as_f64(),
                receiver_empirical: counts[rx] as f64 / config.trials as f64,
                trials: config.trials,
                counts: labels.into_iter().zip(counts).collect(),
                seed,
                retried,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = rows
        .iter()
        .map(|r| (r.receiver_analytic - 0.5).abs())
        .fold(0.0, f64::max);
    let sampled_ok = rows.iter().all(|r| empirical_ok(r.counts[RECEIVER], r.trials));
    let verdict = if max_deviation <= ANALYTIC_TOL && sampled_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(AuditReport {
        variant: config.variant,
        rows,
        max_deviation,
        verdict,
    })
}
