//! Single-particle interferometer simulation.
//!
//! The crate models a one-photon superposition split between a far branch
//! (watched by a receiver) and a near branch that passes through an
//! interferometer controlled by a sender. It provides
//!
//! * [`mode`]: discrete-mode state vectors,
//! * [`optics`]: transfer matrices, circuits and an isometry validator,
//! * [`wavepacket`]: the interferometer output resolved on a spatial grid,
//! * [`measurement`]: projectors, reduction and seeded Born-rule sampling,
//! * [`audit`]: the check that the receiver's statistics ignore the sender.
//!
//! Everything is generic over [`Real`]; the `*64` aliases below fix `f64`,
//! which all documented tolerances assume.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod matrix;
pub mod measurement;
pub mod mode;
pub mod optics;
pub mod scalar;
pub mod wavepacket;

pub use error::{Error, Result};
pub use mode::{label, ModeLabel, ModeState};
pub use scalar::{Amplitude, Real};

pub type ModeState64 = mode::ModeState<f64>;
pub type TransferMatrix64 = optics::TransferMatrix<f64>;
pub type Element64 = optics::Element<f64>;
pub type Circuit64 = optics::Circuit<f64>;
pub type PhaseSetting64 = optics::PhaseSetting<f64>;
pub type Grid64 = wavepacket::Grid<f64>;
pub type WaveFunction64 = wavepacket::WaveFunction<f64>;
pub type PacketPair64 = wavepacket::PacketPair<f64>;
pub type DetectorWindow64 = wavepacket::DetectorWindow<f64>;
pub type Projector64 = measurement::Projector<f64>;
pub type ProjectorSet64 = measurement::ProjectorSet<f64>;
pub type CompositeState64 = audit::CompositeState<f64>;
pub type ScenarioConfig64 = audit::ScenarioConfig<f64>;
