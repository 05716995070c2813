//! Optical elements as complex transfer matrices.
//!
//! Beam splitters use the real Hadamard convention and mirrors/deflectors
//! act as the identity on their modes: reflection phases are global per
//! path and drop out of every detection probability. Circuits are
//! feed-forward element lists; [`Circuit::validate`] checks each element
//! for the isometry property M†M = I that any lossless device must have.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::mode::{label, ModeLabel, ModeState};
use crate::scalar::{re, Real};

/// Isometry tolerance used by [`Circuit::validate`].
pub const ISOMETRY_TOL: f64 = 1e-12;

/// Phase in radians, canonicalized into [0, 2π).
///
/// `0` and `π` stay exact and [`unit`](Self::unit) returns exactly `1` and
/// `−1` for them.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PhaseSetting<T: Real>(T);

impl<T: Real> PhaseSetting<T> {
    pub fn new(radians: T) -> Self {
        let tau = T::TAU();
        let mut p = radians % tau;
        if p < T::zero() {
            p = p + tau;
        }
        if p >= tau {
            p = p - tau;
        }
        Self(p)
    }

    /// "Phase shifter not inserted".
    pub fn zero() -> Self {
        Self(T::zero())
    }

    /// "Phase shifter inserted".
    pub fn pi() -> Self {
        Self(T::PI())
    }

    pub fn radians(self) -> T {
        self.0
    }

    /// e^{iφ}.
    pub fn unit(self) -> Complex<T> {
        if self.0 == T::zero() {
            re(T::one())
        } else if self.0 == T::PI() {
            re(-T::one())
        } else {
            Complex::from_polar(T::one(), self.0)
        }
    }

    /// `n` equally spaced phases k·2π/n, k = 0..n.
    pub fn sweep(n: usize) -> Vec<Self> {
        let step = T::TAU() / T::from_count(n.max(1));
        (0..n).map(|k| Self::new(step * T::from_count(k))).collect()
    }

    /// [`sweep`](Self::sweep) plus the exact points 0 and π, sorted and
    /// without duplicates.
    pub fn sweep_with_canonical(n: usize) -> Vec<Self> {
        let mut v = Self::sweep(n);
        v.push(Self::zero());
        v.push(Self::pi());
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        v.dedup_by(|a, b| a.0 == b.0);
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementKind<T: Real> {
    /// [[cosθ, sinθ], [sinθ, −cosθ]]; θ = π/4 is balanced.
    BeamSplitter {
        theta: T,
    },
    Mirror,
    PhaseShifter {
        phi: T,
    },
    Deflector,
    /// Two modes into one with row (1, e^{iφ})/√2. Never physical.
    HypotheticalCanceller {
        phi: T,
    },
    /// Uniform amplitude scaling; physical only for |amplitude| = 1.
    Attenuator {
        amplitude: T,
    },
}

impl<T: Real> ElementKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BeamSplitter { .. } => "beam_splitter",
            Self::Mirror => "mirror",
            Self::PhaseShifter { .. } => "phase_shifter",
            Self::Deflector => "deflector",
            Self::HypotheticalCanceller { .. } => "hypothetical_canceller",
            Self::Attenuator { .. } => "attenuator",
        }
    }

    /// Required (inputs, outputs) counts; `None` means any equal count ≥ 1.
    fn arity(&self) -> Option<(usize, usize)> {
        match self {
            Self::BeamSplitter { .. } => Some((2, 2)),
            Self::PhaseShifter { .. } => Some((1, 1)),
            Self::HypotheticalCanceller { .. } => Some((2, 1)),
            Self::Mirror | Self::Deflector | Self::Attenuator { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element<T: Real> {
    kind: ElementKind<T>,
    inputs: Vec<ModeLabel>,
    outputs: Vec<ModeLabel>,
}

impl<T: Real> Element<T> {
    pub fn new(kind: ElementKind<T>, inputs: Vec<ModeLabel>, outputs: Vec<ModeLabel>) -> Result<Self> {
        let ok = match kind.arity() {
            Some((i, o)) => inputs.len() == i && outputs.len() == o,
            None => !inputs.is_empty() && inputs.len() == outputs.len(),
        };
        if !ok {
            return Err(Error::Parameter(format!(
                "{} cannot wire {} inputs to {} outputs",
                kind.name(),
                inputs.len(),
                outputs.len()
            )));
        }
        for (side, list) in [("input", &inputs), ("output", &outputs)] {
            for (i, l) in list.iter().enumerate() {
                if list[..i].contains(l) {
                    return Err(Error::Parameter(format!("{} repeats {side} mode `{l}`", kind.name())));
                }
            }
        }
        Ok(Self { kind, inputs, outputs })
    }

    pub fn balanced_splitter(a: &str, b: &str, out_a: &str, out_b: &str) -> Self {
        Self::new(
            ElementKind::BeamSplitter { theta: T::FRAC_PI_4() },
            vec![label(a), label(b)],
            vec![label(out_a), label(out_b)],
        )
        .expect("balanced splitter wiring")
    }

    pub fn mirror(m: &str) -> Self {
        Self::new(ElementKind::Mirror, vec![label(m)], vec![label(m)]).expect("mirror wiring")
    }

    pub fn deflector(m: &str) -> Self {
        Self::new(ElementKind::Deflector, vec![label(m)], vec![label(m)]).expect("deflector wiring")
    }

    pub fn phase_shifter(m: &str, phi: PhaseSetting<T>) -> Self {
        Self::new(
            ElementKind::PhaseShifter { phi: phi.radians() },
            vec![label(m)],
            vec![label(m)],
        )
        .expect("phase shifter wiring")
    }

    pub fn canceller(a: &str, b: &str, out: &str, phi: PhaseSetting<T>) -> Self {
        Self::new(
            ElementKind::HypotheticalCanceller { phi: phi.radians() },
            vec![label(a), label(b)],
            vec![label(out)],
        )
        .expect("canceller wiring")
    }

    pub fn attenuator(m: &str, amplitude: T) -> Self {
        Self::new(ElementKind::Attenuator { amplitude }, vec![label(m)], vec![label(m)]).expect("attenuator wiring")
    }

    pub fn kind(&self) -> &ElementKind<T> {
        &self.kind
    }

    pub fn inputs(&self) -> &[ModeLabel] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ModeLabel] {
        &self.outputs
    }

    /// Transfer matrix of this element (`|outputs| × |inputs|`).
    pub fn matrix(&self) -> TransferMatrix<T> {
        let n = self.inputs.len();
        let entries = match self.kind {
            ElementKind::BeamSplitter { theta } => {
                let (s, c) = theta.sin_cos();
                CMatrix::from_rows(vec![vec![re(c), re(s)], vec![re(s), re(-c)]])
            }
            ElementKind::Mirror | ElementKind::Deflector => CMatrix::identity(n),
            ElementKind::PhaseShifter { phi } => CMatrix::from_rows(vec![vec![PhaseSetting::new(phi).unit()]]),
            ElementKind::HypotheticalCanceller { phi } => {
                let k = T::frac_1_sqrt_2();
                CMatrix::from_rows(vec![vec![re(k), PhaseSetting::new(phi).unit() * k]])
            }
            ElementKind::Attenuator { amplitude } => {
                let mut m = CMatrix::identity(n);
                for i in 0..n {
                    m[(i, i)] = re(amplitude);
                }
                m
            }
        };
        let forced_nonphysical = matches!(self.kind, ElementKind::HypotheticalCanceller { .. });
        TransferMatrix::new(self.inputs.clone(), self.outputs.clone(), entries, forced_nonphysical)
    }
}

/// Complex linear map between labeled mode lists.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix<T: Real> {
    input_modes: Vec<ModeLabel>,
    output_modes: Vec<ModeLabel>,
    entries: CMatrix<T>,
    physical: bool,
}

impl<T: Real> TransferMatrix<T> {
    fn new(
        input_modes: Vec<ModeLabel>,
        output_modes: Vec<ModeLabel>,
        entries: CMatrix<T>,
        forced_nonphysical: bool,
    ) -> Self {
        debug_assert_eq!(entries.rows(), output_modes.len());
        debug_assert_eq!(entries.cols(), input_modes.len());
        let physical = !forced_nonphysical && entries.isometry_deviation() <= T::lit(ISOMETRY_TOL);
        Self {
            input_modes,
            output_modes,
            entries,
            physical,
        }
    }

    pub fn input_modes(&self) -> &[ModeLabel] {
        &self.input_modes
    }

    pub fn output_modes(&self) -> &[ModeLabel] {
        &self.output_modes
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }

    /// Applies the map to amplitudes listed in `input_modes` order.
    pub fn apply(&self, amps: &[Complex<T>]) -> Vec<Complex<T>> {
        self.entries.apply(amps)
    }

    /// Applies the map to a state; missing input modes count as zero.
    pub fn apply_state(&self, s: &ModeState<T>) -> ModeState<T> {
        let amps: Vec<_> = self.input_modes.iter().map(|l| s.amplitude(l)).collect();
        ModeState::from_unique(self.output_modes.iter().cloned().zip(self.apply(&amps)).collect())
    }
}

/// (flag, max-entry |M†M − I|).
pub fn is_isometry<T: Real>(m: &TransferMatrix<T>, tol: T) -> (bool, T) {
    let dev = m.entries.isometry_deviation();
    (dev <= tol, dev)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub element_index: usize,
    pub kind: String,
    pub deviation: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub physical: bool,
    pub failures: Vec<ValidationFailure>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.physical {
            return f.write_str("physical: all elements are isometries");
        }
        f.write_str("not physical")?;
        for e in &self.failures {
            write!(
                f,
                "\n  element {} {}: {}, deviation {}",
                e.element_index, e.kind, e.reason, e.deviation
            )?;
        }
        Ok(())
    }
}

pub const REASON_NOT_ISOMETRY: &str = "not an isometry";
pub const REASON_DIMENSION: &str = "not an isometry: merges modes and discards amplitude";
pub const REASON_ATTENUATION: &str = "partial attenuation: norm lost without a compensating increase elsewhere";

/// Feed-forward sequence of elements over a declared set of input modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T: Real> {
    inputs: Vec<ModeLabel>,
    elements: Vec<Element<T>>,
}

impl<T: Real> Circuit<T> {
    /// Circuit with an explicit input-mode universe.
    pub fn new(inputs: Vec<ModeLabel>, elements: Vec<Element<T>>) -> Self {
        Self { inputs, elements }
    }

    /// Infers the input modes: every label consumed before any element
    /// produced it.
    pub fn from_elements(elements: Vec<Element<T>>) -> Self {
        let mut inputs: Vec<ModeLabel> = Vec::new();
        let mut seen: Vec<ModeLabel> = Vec::new();
        for e in &elements {
            for l in &e.inputs {
                if !seen.contains(l) {
                    inputs.push(l.clone());
                    seen.push(l.clone());
                }
            }
            for l in &e.outputs {
                if !seen.contains(l) {
                    seen.push(l.clone());
                }
            }
        }
        Self { inputs, elements }
    }

    pub fn identity(modes: Vec<ModeLabel>) -> Self {
        Self::new(modes, Vec::new())
    }

    pub fn inputs(&self) -> &[ModeLabel] {
        &self.inputs
    }

    pub fn elements(&self) -> &[Element<T>] {
        &self.elements
    }

    /// Live mode list after every element, checking that each element only
    /// consumes live modes and never overwrites an untouched one.
    fn wire(&self) -> Result<Vec<Vec<ModeLabel>>> {
        let mut live = self.inputs.clone();
        let mut producer: BTreeMap<ModeLabel, Option<usize>> = live.iter().map(|l| (l.clone(), None)).collect();
        let mut consumer: BTreeMap<ModeLabel, usize> = BTreeMap::new();
        let mut stages = vec![live.clone()];
        for (i, e) in self.elements.iter().enumerate() {
            for l in &e.inputs {
                if !live.contains(l) {
                    let detail = match consumer.get(l) {
                        Some(j) => format!("input `{l}` was already consumed by element {j}"),
                        None => format!("input `{l}` is not produced by any earlier element"),
                    };
                    return Err(Error::Wiring { element: i, detail });
                }
            }
            for l in &e.outputs {
                if live.contains(l) && !e.inputs.contains(l) {
                    let by = match producer.get(l) {
                        Some(Some(j)) => format!("element {j}"),
                        _ => "the circuit input".to_string(),
                    };
                    return Err(Error::Wiring {
                        element: i,
                        detail: format!("output `{l}` collides with the live mode from {by}"),
                    });
                }
            }
            let at = live.iter().position(|l| e.inputs.contains(l)).unwrap_or(live.len());
            let mut next: Vec<ModeLabel> = live[..at].iter().filter(|l| !e.inputs.contains(l)).cloned().collect();
            next.extend(e.outputs.iter().cloned());
            next.extend(live[at..].iter().filter(|l| !e.inputs.contains(l)).cloned());
            for l in &e.inputs {
                consumer.insert(l.clone(), i);
            }
            for l in &e.outputs {
                producer.insert(l.clone(), Some(i));
            }
            live = next;
            stages.push(live.clone());
        }
        Ok(stages)
    }

    pub fn output_modes(&self) -> Result<Vec<ModeLabel>> {
        Ok(self.wire()?.pop().unwrap_or_default())
    }

    /// Isometry check of every element at [`ISOMETRY_TOL`].
    pub fn validate(&self) -> Result<ValidationReport> {
        self.wire()?;
        let tol = T::lit(ISOMETRY_TOL);
        let mut failures = Vec::new();
        for (i, e) in self.elements.iter().enumerate() {
            let m = e.matrix();
            let (ok, dev) = is_isometry(&m, tol);
            if ok && m.is_physical() {
                continue;
            }
            let sv = m.entries.singular_values();
            let contraction = sv.iter().all(|s| *s <= T::one() + tol) && sv.iter().any(|s| *s < T::one() - tol);
            let reason = if m.output_modes.len() < m.input_modes.len() {
                REASON_DIMENSION
            } else if contraction {
                REASON_ATTENUATION
            } else {
                REASON_NOT_ISOMETRY
            };
            failures.push(ValidationFailure {
                element_index: i,
                kind: e.kind.name().to_string(),
                deviation: dev.as_f64(),
                reason: reason.to_string(),
            });
        }
        Ok(ValidationReport {
            physical: failures.is_empty(),
            failures,
        })
    }

    /// Evolves `s` through the circuit. Refuses non-physical circuits.
    ///
    /// Modes of `s` outside the circuit's inputs pass through untouched.
    pub fn apply(&self, s: &ModeState<T>) -> Result<ModeState<T>> {
        let report = self.validate()?;
        if !report.physical {
            return Err(Error::NonPhysical(report.to_string()));
        }
        self.propagate(s)
    }

    /// Like [`apply`](Self::apply) but also runs non-physical circuits.
    /// Exists to exhibit what an impossible device would do.
    pub fn apply_non_physical(&self, s: &ModeState<T>) -> Result<ModeState<T>> {
        self.wire()?;
        self.propagate(s)
    }

    fn propagate(&self, s: &ModeState<T>) -> Result<ModeState<T>> {
        let stages = self.wire()?;
        let spectators: Vec<ModeLabel> = s.labels().filter(|l| !self.inputs.contains(l)).cloned().collect();
        for st in &stages {
            if let Some(l) = st.iter().find(|l| spectators.contains(l)) {
                return Err(Error::Domain(format!(
                    "state mode `{l}` is not a circuit input but the circuit produces it"
                )));
            }
        }
        let mut cur: ModeState<T> =
            ModeState::from_unique(self.inputs.iter().map(|l| (l.clone(), s.amplitude(l))).collect());
        for e in &self.elements {
            let out = e.matrix().apply_state(&cur);
            let kept = cur.restrict(|l| !e.inputs.contains(l));
            cur = ModeState::superpose(&out, &kept, re(T::one()), re(T::one()));
        }
        let last = stages.last().cloned().unwrap_or_default();
        let mut entries: Vec<(ModeLabel, Complex<T>)> = last
            .into_iter()
            .map(|l| {
                let a = cur.amplitude(&l);
                (l, a)
            })
            .collect();
        entries.extend(spectators.into_iter().map(|l| {
            let a = s.amplitude(&l);
            (l, a)
        }));
        Ok(ModeState::from_unique(entries))
    }

    /// Product of the element matrices, embedded on the live modes at each
    /// stage: maps `inputs()` to `output_modes()`.
    pub fn transfer_matrix(&self) -> Result<TransferMatrix<T>> {
        let stages = self.wire()?;
        let mut total = CMatrix::identity(self.inputs.len());
        let mut forced = false;
        for (e, w) in self.elements.iter().zip(stages.windows(2)) {
            let (before, after) = (&w[0], &w[1]);
            let m = e.matrix();
            forced |= matches!(e.kind, ElementKind::HypotheticalCanceller { .. });
            let mut stage = CMatrix::zeros(after.len(), before.len());
            for (r, lo) in after.iter().enumerate() {
                if let Some(oi) = e.outputs.iter().position(|x| x == lo) {
                    for (ii, li) in e.inputs.iter().enumerate() {
                        let c = before.iter().position(|x| x == li).expect("wired input");
                        stage[(r, c)] = m.entries[(oi, ii)];
                    }
                } else {
                    let c = before.iter().position(|x| x == lo).expect("spectator mode");
                    stage[(r, c)] = re(T::one());
                }
            }
            total = stage.matmul(&total);
        }
        let outputs = stages.last().cloned().unwrap_or_default();
        Ok(TransferMatrix::new(self.inputs.clone(), outputs, total, forced))
    }
}

/// Input mode of the interferometer and its unused second port.
pub const MODE_IN: &str = "h+";
pub const MODE_DARK: &str = "d";
pub const MODE_UPPER: &str = "u";
pub const MODE_LOWER: &str = "l";
pub const MODE_H: &str = "H";
pub const MODE_V: &str = "V";

/// Splitter, two mirrors, a phase shifter on the lower arm and two
/// deflectors that bring both arms side by side: `h+ → (u + e^{iφ} l)/√2`.
pub fn shiekh_circuit<T: Real>(phi: PhaseSetting<T>) -> Circuit<T> {
    Circuit::new(
        vec![label(MODE_IN), label(MODE_DARK)],
        vec![
            Element::balanced_splitter(MODE_IN, MODE_DARK, MODE_UPPER, MODE_LOWER),
            Element::mirror(MODE_UPPER),
            Element::mirror(MODE_LOWER),
            Element::phase_shifter(MODE_LOWER, phi),
            Element::deflector(MODE_UPPER),
            Element::deflector(MODE_LOWER),
        ],
    )
}

/// The same arms closed by a second balanced splitter onto `H`, `V`.
pub fn mach_zehnder_circuit<T: Real>(phi: PhaseSetting<T>) -> Circuit<T> {
    let mut elements = shiekh_circuit(phi).elements;
    elements.truncate(4);
    elements.push(Element::balanced_splitter(MODE_UPPER, MODE_LOWER, MODE_H, MODE_V));
    Circuit::new(vec![label(MODE_IN), label(MODE_DARK)], elements)
}

/// Arms merged by the impossible perfect canceller into a single mode `c`.
pub fn canceller_circuit<T: Real>(phi: PhaseSetting<T>) -> Circuit<T> {
    Circuit::new(
        vec![label(MODE_UPPER), label(MODE_LOWER)],
        vec![Element::canceller(MODE_UPPER, MODE_LOWER, "c", phi)],
    )
}

/// (|u⟩ + e^{iφ}|l⟩)/√2.
pub fn interferometer_output<T: Real>(phi: PhaseSetting<T>) -> ModeState<T> {
    let k = T::frac_1_sqrt_2();
    ModeState::from_unique(vec![(label(MODE_UPPER), re(k)), (label(MODE_LOWER), phi.unit() * k)])
}

/// Output of a balanced Mach-Zehnder: H = (1 + e^{iφ})/2, V = (1 − e^{iφ})/2.
pub fn mz_output<T: Real>(phi: PhaseSetting<T>) -> ModeState<T> {
    let e = phi.unit();
    let one = re(T::one());
    let half = T::half();
    ModeState::from_unique(vec![
        (label(MODE_H), (one + e) * half),
        (label(MODE_V), (one - e) * half),
    ])
}

/// One entry of a circuit description file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "in")]
    pub inputs: Vec<String>,
    #[serde(rename = "out")]
    pub outputs: Vec<String>,
}

impl ElementSpec {
    pub fn to_element<T: Real>(&self) -> Result<Element<T>> {
        let param = |k: &str| -> Result<T> {
            self.params
                .get(k)
                .map(|v| T::lit(*v))
                .ok_or_else(|| Error::Parameter(format!("{} needs parameter `{k}`", self.kind)))
        };
        let kind = match self.kind.as_str() {
            "beam_splitter" => ElementKind::BeamSplitter {
                theta: self.params.get("theta").map_or(T::FRAC_PI_4(), |v| T::lit(*v)),
            },
            "mirror" => ElementKind::Mirror,
            "deflector" => ElementKind::Deflector,
            "phase_shifter" => ElementKind::PhaseShifter { phi: param("phi")? },
            "hypothetical_canceller" => ElementKind::HypotheticalCanceller { phi: param("phi")? },
            "attenuator" => ElementKind::Attenuator {
                amplitude: param("amplitude")?,
            },
            other => return Err(Error::Parameter(format!("unknown element kind `{other}`"))),
        };
        let labels = |v: &[String]| v.iter().map(|s| ModeLabel::new(s.as_str())).collect::<Result<Vec<_>>>();
        Element::new(kind, labels(&self.inputs)?, labels(&self.outputs)?)
    }

    pub fn from_element<T: Real>(e: &Element<T>) -> Self {
        let mut params = BTreeMap::new();
        match e.kind {
            ElementKind::BeamSplitter { theta } => {
                params.insert("theta".into(), theta.as_f64());
            }
            ElementKind::PhaseShifter { phi } | ElementKind::HypotheticalCanceller { phi } => {
                params.insert("phi".into(), phi.as_f64());
            }
            ElementKind::Attenuator { amplitude } => {
                params.insert("amplitude".into(), amplitude.as_f64());
            }
            ElementKind::Mirror | ElementKind::Deflector => {}
        }
        Self {
            kind: e.kind.name().to_string(),
            params,
            inputs: e.inputs.iter().map(|l| l.to_string()).collect(),
            outputs: e.outputs.iter().map(|l| l.to_string()).collect(),
        }
    }
}

impl<T: Real> Circuit<T> {
    /// Parses a circuit description (JSON list of element specs).
    pub fn from_json(text: &str) -> Result<Self> {
        let specs: Vec<ElementSpec> = serde_json::from_str(text)?;
        let elements = specs.iter().map(ElementSpec::to_element).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_elements(elements))
    }

    pub fn to_json(&self) -> String {
        let specs: Vec<ElementSpec> = self.elements.iter().map(ElementSpec::from_element).collect();
        serde_json::to_string_pretty(&specs).expect("element specs serialize")
    }
}
