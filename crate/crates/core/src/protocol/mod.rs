//! Alice/Bob protocol: single-frequency sync, two-frequency (offset-immune)
//! sync, and the common time origin.
//!
//! Each party acts only on its own configuration, its own measurement
//! records, and what arrives over the classical channel. The orchestrator
//! owns the shared physics (ensembles, the common time axis) and commits
//! events in a fixed order. Hidden clock offsets are read back only by
//! [`score`].

mod events;
mod run;
mod score;
mod station;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, ChannelModel, Delivery};
use crate::ensemble::{EnsembleError, PairLabel, SamplingSchedule};
use crate::estimation::{EstimationError, PhaseEstimate, TimeEstimate};
use crate::quantum::{BasisPhase, ClockSpecies, Party};

pub use events::{EventQueue, Transcript, TranscriptEvent, TranscriptRecord};
pub use run::{establish_time_origin, run_single_frequency, run_two_frequency, RunOutput};
pub use score::score;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("both species have omega {0}")]
    SpeciesCollision(f64),
    #[error("mismatched schedules: {0}")]
    MismatchedSchedules(String),
    #[error("party {party} has no basis phase for species {species:?}")]
    MissingPhase { party: Party, species: String },
    #[error("party {0} is configured as the wrong role")]
    WrongRole(Party),
    #[error("basis phases of the two species do not share one offset")]
    PhaseLockMismatch,
    #[error("invalid time-origin configuration: {0}")]
    TimeOrigin(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// One party's private setup.
///
/// `local_clock_offset` is how far this party's clock reads ahead of the
/// common time axis. It drives the simulation and the scorer; party logic
/// never sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyConfig {
    pub party: Party,
    pub basis_phases: BTreeMap<String, BasisPhase<f64>>,
    pub local_clock_offset: f64,
}

impl PartyConfig {
    /// Every listed species locked to the same basis phase.
    pub fn locked(party: Party, species: &[&ClockSpecies<f64>], phase: f64, local_clock_offset: f64) -> Self {
        PartyConfig {
            party,
            basis_phases: species
                .iter()
                .map(|s| (s.name().to_string(), BasisPhase::new(phase)))
                .collect(),
            local_clock_offset,
        }
    }

    pub fn phase_for(&self, species: &str) -> Result<BasisPhase<f64>, ProtocolError> {
        self.basis_phases
            .get(species)
            .copied()
            .ok_or_else(|| ProtocolError::MissingPhase {
                party: self.party,
                species: species.to_string(),
            })
    }
}

/// Sampling plan of both parties for one species, in their own clock readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedules {
    pub alice: SamplingSchedule<f64>,
    pub bob: SamplingSchedule<f64>,
}

impl Schedules {
    pub fn same(schedule: SamplingSchedule<f64>) -> Self {
        Schedules {
            alice: schedule.clone(),
            bob: schedule,
        }
    }
}

/// Seeds for the quantum draws and for the classical channel. Keeping them
/// apart is what lets channel settings vary without touching measurement
/// outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub quantum: u64,
    pub channel: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    TypeILabels { species: String, labels: Vec<PairLabel> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub sender: Party,
    pub payload: Payload,
    pub send_time: f64,
    pub deliver_time: f64,
}

/// Puts Alice's Type-I labels on the channel. `None` when the channel loses
/// the message.
pub fn broadcast_labels<R: rand::Rng + ?Sized>(
    channel: &ChannelModel,
    sender: Party,
    species: &str,
    labels: Vec<PairLabel>,
    send_time: f64,
    rng: &mut R,
) -> Option<ClassicalMessage> {
    match channel::deliver(channel, send_time, rng) {
        Delivery::Delivered(deliver_time) => Some(ClassicalMessage {
            sender,
            payload: Payload::TypeILabels {
                species: species.to_string(),
                labels,
            },
            send_time,
            deliver_time,
        }),
        Delivery::Lost => None,
    }
}

/// Frequencies for the time-origin construction.
///
/// `protocol_duration` bounds how far apart the two clocks may read. The
/// strict bound `delta_omega * protocol_duration < π/2` keeps the first
/// envelope maximum after each party's own zero on the same branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeOriginConfig {
    omega1: f64,
    delta_omega: f64,
    protocol_duration: f64,
}

impl TimeOriginConfig {
    pub fn new(omega1: f64, delta_omega: f64, protocol_duration: f64) -> Result<Self, ProtocolError> {
        for (name, v) in [
            ("omega1", omega1),
            ("delta_omega", delta_omega),
            ("protocol_duration", protocol_duration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ProtocolError::TimeOrigin(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let product = delta_omega * protocol_duration;
        if product >= std::f64::consts::FRAC_PI_2 {
            return Err(ProtocolError::TimeOrigin(format!(
                "delta_omega * protocol_duration = {product} must be < pi/2"
            )));
        }
        Ok(TimeOriginConfig {
            omega1,
            delta_omega,
            protocol_duration,
        })
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega1 + self.delta_omega
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn protocol_duration(&self) -> f64 {
        self.protocol_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    SingleFrequency,
    TwoFrequency,
    TimeOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncOutcome {
    Synced,
    NoSync,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesEstimates {
    pub species: String,
    pub omega: f64,
    pub alice: PhaseEstimate<f64>,
    pub bob: PhaseEstimate<f64>,
}

/// Bob's clock minus Alice's, as the two parties can work it out from their
/// published estimates. `ambiguity` is the period it is known modulo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetEstimate {
    pub value: f64,
    pub sigma: f64,
    pub ambiguity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    pub mode: RunMode,
    pub outcome: SyncOutcome,
    pub reason: Option<String>,
    pub species: Vec<SpeciesEstimates>,
    pub envelope_phase_a: Option<PhaseEstimate<f64>>,
    pub envelope_phase_b: Option<PhaseEstimate<f64>>,
    pub t_origin_a: Option<TimeEstimate<f64>>,
    pub t_origin_b: Option<TimeEstimate<f64>>,
    pub offset: Option<OffsetEstimate>,
    /// Common time at which the last party finished sampling.
    pub completion_time: Option<f64>,
    /// Filled in by [`score`] only.
    pub sync_error: Option<f64>,
}

impl SyncResult {
    fn empty(mode: RunMode, outcome: SyncOutcome, reason: Option<String>) -> Self {
        SyncResult {
            mode,
            outcome,
            reason,
            species: Vec::new(),
            envelope_phase_a: None,
            envelope_phase_b: None,
            t_origin_a: None,
            t_origin_b: None,
            offset: None,
            completion_time: None,
            sync_error: None,
        }
    }
}
