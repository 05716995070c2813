//! Projective measurement with state reduction.
//!
//! A [`Projector`] selects a region: detector windows on the `r`-axis, a set
//! of discrete modes, or both (for states that mix a spatial branch with a
//! discrete one). Any state type implementing [`Measurable`] can be
//! measured; probabilities follow the Born rule and reduction is projection
//! followed by renormalization.
//!
//! Sampling is counter-based: trial `i` of stream `k` under seed `s` always
//! draws the same uniform number, no matter how trials are batched.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mode::{ModeLabel, ModeState};
use crate::scalar::{re, Real};
use crate::wavepacket::{norm_tol, DetectorWindow, Grid, WaveFunction};

/// Probability below which reduction is refused.
pub const ZERO_NORM_EPS: f64 = 1e-12;
/// Tolerance on Σ_k p_k = 1 for a projector set to count as complete.
pub const COMPLETENESS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T: Real> {
    label: String,
    windows: Vec<DetectorWindow<T>>,
    modes: BTreeSet<ModeLabel>,
}

impl<T: Real> Projector<T> {
    pub fn window(label: impl Into<String>, w: DetectorWindow<T>) -> Self {
        Self::windows(label, vec![w])
    }

    /// Union of several windows, e.g. the complement of a detector.
    pub fn windows(label: impl Into<String>, windows: Vec<DetectorWindow<T>>) -> Self {
        Self {
            label: label.into(),
            windows,
            modes: BTreeSet::new(),
        }
    }

    pub fn modes<I: IntoIterator<Item = ModeLabel>>(label: impl Into<String>, modes: I) -> Self {
        Self {
            label: label.into(),
            windows: Vec::new(),
            modes: modes.into_iter().collect(),
        }
    }

    /// Adds discrete modes to a window projector.
    pub fn with_modes<I: IntoIterator<Item = ModeLabel>>(mut self, modes: I) -> Self {
        self.modes.extend(modes);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn window_list(&self) -> &[DetectorWindow<T>] {
        &self.windows
    }

    pub fn mode_set(&self) -> &BTreeSet<ModeLabel> {
        &self.modes
    }

    fn overlaps(&self, other: &Self) -> bool {
        self.windows.iter().any(|a| other.windows.iter().any(|b| a.overlaps(b)))
            || self.modes.intersection(&other.modes).next().is_some()
    }
}

/// Pairwise orthogonal projectors with distinct outcome labels.
///
/// Completeness depends on the state space and is checked when measuring.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSet<T: Real> {
    projectors: Vec<Projector<T>>,
}

impl<T: Real> ProjectorSet<T> {
    pub fn new(projectors: Vec<Projector<T>>) -> Result<Self> {
        for (i, p) in projectors.iter().enumerate() {
            for q in &projectors[..i] {
                if q.label == p.label {
                    return Err(Error::DuplicateOutcome(p.label.clone()));
                }
                if q.overlaps(p) {
                    return Err(Error::NotOrthogonal(q.label.clone(), p.label.clone()));
                }
            }
        }
        Ok(Self { projectors })
    }

    pub fn projectors(&self) -> &[Projector<T>] {
        &self.projectors
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.projectors.iter().map(|p| p.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// Appends a projector, keeping the set orthogonal.
    pub fn extended(&self, p: Projector<T>) -> Result<Self> {
        let mut v = self.projectors.clone();
        v.push(p);
        Self::new(v)
    }
}

/// `{"in": w, "out": grid ∖ w}`.
pub fn in_out_partition<T: Real>(w: DetectorWindow<T>, grid: &Grid<T>) -> Result<ProjectorSet<T>> {
    w.check_within(grid)?;
    ProjectorSet::new(vec![
        Projector::window("in", w),
        Projector::windows("out", w.complement(grid)),
    ])
}

/// Three adjacent counters: left of `w`, `w` itself, right of `w`. A side
/// counter is omitted when `w` reaches that edge of the grid.
pub fn three_counter_partition<T: Real>(w: DetectorWindow<T>, grid: &Grid<T>) -> Result<ProjectorSet<T>> {
    w.check_within(grid)?;
    let mut v = Vec::with_capacity(3);
    if grid.r_min() < w.a() {
        v.push(Projector::window("left", DetectorWindow::new(grid.r_min(), w.a())?));
    }
    v.push(Projector::window("in", w));
    if w.b() < grid.r_max() {
        v.push(Projector::window("right", DetectorWindow::new(w.b(), grid.r_max())?));
    }
    ProjectorSet::new(v)
}

/// State that projectors can act on.
pub trait Measurable<T: Real>: Clone {
    fn norm_sqr(&self) -> T;

    /// P|ψ⟩, unnormalized.
    fn project(&self, p: &Projector<T>) -> Result<Self>;

    fn rescale(&self, k: T) -> Self;

    fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= norm_tol()
    }
}

impl<T: Real> Measurable<T> for ModeState<T> {
    fn norm_sqr(&self) -> T {
        ModeState::norm_sqr(self)
    }

    fn project(&self, p: &Projector<T>) -> Result<Self> {
        if p.modes.is_empty() && !p.windows.is_empty() {
            return Err(Error::Domain(format!(
                "window projector `{}` applied to a discrete-mode state",
                p.label
            )));
        }
        Ok(self.restrict(|l| p.modes.contains(l)))
    }

    fn rescale(&self, k: T) -> Self {
        self.scale(re(k))
    }
}

impl<T: Real> Measurable<T> for WaveFunction<T> {
    fn norm_sqr(&self) -> T {
        WaveFunction::norm_sqr(self)
    }

    fn project(&self, p: &Projector<T>) -> Result<Self> {
        if p.windows.is_empty() && !p.modes.is_empty() {
            return Err(Error::Domain(format!(
                "mode projector `{}` applied to a wave function",
                p.label
            )));
        }
        WaveFunction::project(self, &p.windows)
    }

    fn rescale(&self, k: T) -> Self {
        self.scale(re(k))
    }
}

/// ⟨ψ|P|ψ⟩ for a normalized state.
pub fn probability<T: Real, S: Measurable<T>>(state: &S, p: &Projector<T>) -> Result<T> {
    if !state.is_normalized() {
        return Err(Error::Domain(format!(
            "state norm² is {}, expected 1",
            state.norm_sqr()
        )));
    }
    Ok(state.project(p)?.norm_sqr())
}

/// P|ψ⟩/‖P|ψ⟩‖. Fails when the outcome has probability below
/// [`ZERO_NORM_EPS`]; such an outcome cannot occur, so reduce with a
/// complementary projector instead.
pub fn reduce<T: Real, S: Measurable<T>>(state: &S, p: &Projector<T>) -> Result<S> {
    let prob = probability(state, p)?;
    if prob < T::lit(ZERO_NORM_EPS) {
        return Err(Error::ZeroNormReduction {
            label: p.label.clone(),
            probability: prob.as_f64(),
        });
    }
    Ok(state.project(p)?.rescale(prob.sqrt().recip()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord<T: Real, S> {
    pub label: String,
    pub probability: T,
    /// `None` when the outcome is impossible (probability below ε).
    pub reduced: Option<S>,
}

/// Born probabilities for every projector of `set`, in set order.
pub fn outcome_probabilities<T: Real, S: Measurable<T>>(state: &S, set: &ProjectorSet<T>) -> Result<Vec<T>> {
    let probs = set
        .projectors
        .iter()
        .map(|p| probability(state, p))
        .collect::<Result<Vec<T>>>()?;
    let total: T = probs.iter().cloned().sum();
    if total < T::one() - T::lit(COMPLETENESS_TOL) {
        return Err(Error::Incomplete { total: total.as_f64() });
    }
    Ok(probs)
}

/// Probability and reduced state for each outcome.
pub fn outcomes<T: Real, S: Measurable<T>>(state: &S, set: &ProjectorSet<T>) -> Result<Vec<OutcomeRecord<T, S>>> {
    let probs = outcome_probabilities(state, set)?;
    set.projectors
        .iter()
        .zip(probs)
        .map(|(p, prob)| {
            let reduced = if prob < T::lit(ZERO_NORM_EPS) {
                None
            } else {
                Some(reduce(state, p)?)
            };
            Ok(OutcomeRecord {
                label: p.label.clone(),
                probability: prob,
                reduced,
            })
        })
        .collect()
}

/// Counter-based uniform stream: word position encodes the trial index.
#[derive(Clone, Debug)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform draw in [0, 1) for trial `i`.
    pub fn uniform_at(&mut self, i: u64) -> f64 {
        self.rng.set_word_pos(u128::from(i) * 2);
        to_unit(self.rng.next_u64())
    }

    /// Draws for trials `start..start + n`, in order.
    pub fn uniforms(&mut self, start: u64, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.rng.set_word_pos(u128::from(start) * 2);
        (0..n).map(move |_| to_unit(self.rng.next_u64()))
    }
}

fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF lookup over the ordered outcome list. Draws past the last
/// cumulative value (rounding slack) fall to the last outcome with nonzero
/// probability.
pub fn pick_outcome(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last = k;
        }
        acc += p;
        if u < acc {
            return k;
        }
    }
    last
}

/// Outcome counts for `trials` draws from `probs`.
pub fn sample_counts(probs: &[f64], seed: u64, stream: u64, trials: u64) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut ts = TrialStream::new(seed, stream);
    for u in ts.uniforms(0, trials as usize) {
        counts[pick_outcome(probs, u)] += 1;
    }
    counts
}

/// Samples one outcome (trial `trial` of stream 0 under `seed`) and returns
/// its label with the reduced state.
pub fn measure_trial<T: Real, S: Measurable<T>>(
    state: &S,
    set: &ProjectorSet<T>,
    seed: u64,
    trial: u64,
) -> Result<(String, S)> {
    let probs: Vec<f64> = outcome_probabilities(state, set)?
        .into_iter()
        .map(Real::as_f64)
        .collect();
    let u = TrialStream::new(seed, 0).uniform_at(trial);
    let k = pick_outcome(&probs, u);
    let p = &set.projectors[k];
    Ok((p.label.clone(), reduce(state, p)?))
}

/// [`measure_trial`] for trial 0.
pub fn measure<T: Real, S: Measurable<T>>(state: &S, set: &ProjectorSet<T>, seed: u64) -> Result<(String, S)> {
    measure_trial(state, set, seed, 0)
}

/// Three binomial standard deviations for `trials` draws at probability `p`.
pub fn binomial_band(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
