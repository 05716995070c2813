//! Discrete-mode state vectors.
//!
//! A [`ModeState`] is an ordered list of `(label, amplitude)` pairs. Labels
//! absent from a state carry an implicit zero amplitude, so states with
//! disjoint supports combine without any bookkeeping.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance on |‖ψ‖² − 1| for the `normalized` flag.
pub fn norm_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

/// Name of a discrete optical mode, e.g. `h+`, `u`, `H`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModeLabel(String);

impl ModeLabel {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ModeLabel {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl TryFrom<&str> for ModeLabel {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ModeLabel> for String {
    fn from(label: ModeLabel) -> Self {
        label.0
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand for well-known labels in tests and fixtures. Panics on `""`.
pub fn label(id: &str) -> ModeLabel {
    ModeLabel::new(id).expect("nonempty label")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeState<T: Real> {
    entries: Vec<(ModeLabel, Complex<T>)>,
    normalized: bool,
}

impl<T: Real> ModeState<T> {
    /// Builds a state from explicit amplitudes, rejecting repeated labels.
    pub fn new<I, L>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, Complex<T>)>,
        L: Into<String>,
    {
        let mut out: Vec<(ModeLabel, Complex<T>)> = Vec::new();
        for (l, a) in entries {
            let l = ModeLabel::new(l)?;
            if out.iter().any(|(k, _)| *k == l) {
                return Err(Error::DuplicateLabel(l.0));
            }
            out.push((l, a));
        }
        Ok(Self::from_unique(out))
    }

    /// Caller guarantees distinct labels.
    pub(crate) fn from_unique(entries: Vec<(ModeLabel, Complex<T>)>) -> Self {
        let n2: T = entries.iter().map(|(_, a)| a.norm_sqr()).sum();
        let normalized = (n2 - T::one()).abs() <= norm_tolerance::<T>();
        Self { entries, normalized }
    }

    pub fn empty() -> Self {
        Self::from_unique(Vec::new())
    }

    /// Unit amplitude on a single mode.
    pub fn basis(l: ModeLabel) -> Self {
        Self::from_unique(vec![(l, Complex::new(T::one(), T::zero()))])
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeLabel, Complex<T>)> {
        self.entries.iter().map(|(l, a)| (l, *a))
    }

    pub fn labels(&self) -> impl Iterator<Item = &ModeLabel> {
        self.entries.iter().map(|(l, _)| l)
    }

    pub fn contains(&self, l: &ModeLabel) -> bool {
        self.entries.iter().any(|(k, _)| k == l)
    }

    /// Amplitude on `l`; zero for labels the state does not mention.
    pub fn amplitude(&self, l: &ModeLabel) -> Complex<T> {
        self.entries
            .iter()
            .find(|(k, _)| k == l)
            .map(|(_, a)| *a)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Like [`amplitude`](Self::amplitude), looking the label up by string.
    pub fn amp(&self, id: &str) -> Complex<T> {
        self.entries
            .iter()
            .find(|(k, _)| k.as_str() == id)
            .map(|(_, a)| *a)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.entries
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (l, a)| {
                acc + a.conj() * other.amplitude(l)
            })
    }

    /// `ca·a + cb·b`, with `a`'s labels first, then any labels only `b` has.
    pub fn superpose(a: &Self, b: &Self, ca: Complex<T>, cb: Complex<T>) -> Self {
        let mut out: Vec<(ModeLabel, Complex<T>)> = a
            .entries
            .iter()
            .map(|(l, x)| (l.clone(), ca * x + cb * b.amplitude(l)))
            .collect();
        for (l, y) in &b.entries {
            if !a.contains(l) {
                out.push((l.clone(), cb * y));
            }
        }
        Self::from_unique(out)
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self::from_unique(self.entries.iter().map(|(l, a)| (l.clone(), a * k)).collect())
    }

    /// Keeps only the listed modes (the rest become implicit zeros).
    pub fn restrict<F: Fn(&ModeLabel) -> bool>(&self, keep: F) -> Self {
        Self::from_unique(self.entries.iter().filter(|(l, _)| keep(l)).cloned().collect())
    }

    /// Divides by the norm. Returns `None` for the zero vector.
    pub fn normalize(&self) -> Option<Self> {
        let n = self.norm();
        if n == T::zero() {
            return None;
        }
        Some(self.scale(Complex::new(n.recip(), T::zero())))
    }
}

#[derive(Serialize, Deserialize)]
struct ModeEntryRepr {
    label: String,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ModeStateRepr {
    modes: Vec<ModeEntryRepr>,
}

impl<T: Real> Serialize for ModeState<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModeStateRepr {
            modes: self
                .entries
                .iter()
                .map(|(l, a)| ModeEntryRepr {
                    label: l.0.clone(),
                    re: a.re.as_f64(),
                    im: a.im.as_f64(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for ModeState<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ModeStateRepr::deserialize(d)?;
        ModeState::new(
            repr.modes
                .into_iter()
                .map(|m| (m.label, Complex::new(T::lit(m.re), T::lit(m.im)))),
        )
        .map_err(serde::de::Error::custom)
    }
}
