//! Simulator for synchronizing two clocks from shared entangled pairs.
//!
//! The quantum and estimation layers are generic over the float type; the
//! aliases below fix it to `f64`, which the protocol layer uses throughout.

pub mod baseline;
pub mod channel;
pub mod ensemble;
pub mod estimation;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod scalar;
pub mod stats;

pub type SingleQubitState = quantum::SingleQubitState<f64>;
pub type TwoQubitState = quantum::TwoQubitState<f64>;
pub type SingleQubitUnitary = quantum::SingleQubitUnitary<f64>;
pub type BasisPhase = quantum::BasisPhase<f64>;
pub type ClockSpecies = quantum::ClockSpecies<f64>;
pub type Ensemble = ensemble::Ensemble<f64>;
pub type SamplingSchedule = ensemble::SamplingSchedule<f64>;
pub type PopulationSeries = ensemble::PopulationSeries<f64>;
pub type PhaseEstimate = estimation::PhaseEstimate<f64>;
pub type TimeEstimate = estimation::TimeEstimate<f64>;
pub type BeatSeries = estimation::BeatSeries<f64>;

pub use quantum::Party;
