//! Recovery of clock phase and beat-envelope phase from outcome counts.
//!
//! Frequencies are known exactly, so every fit here is linear in its
//! unknowns: a single fringe is `c + a·cos Ωt + b·sin Ωt`, and the difference
//! of two fringes is the sum of two such tones.

mod beat;
mod linear;
mod phase;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use beat::{
    beat_difference, envelope_fit, envelope_maximum_after, envelope_phase,
    first_envelope_maximum, BeatSeries, EnvelopeFit, TimeEstimate,
};
pub use phase::estimate_phase;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("fit is rank deficient (too few distinct sample times)")]
    RankDeficient,
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("time grids differ")]
    GridMismatch,
    #[error("both species have the same frequency")]
    SameFrequency,
    #[error("grid spacing {spacing} does not resolve the fast oscillation (needs < {limit})")]
    UnderResolved { spacing: f64, limit: f64 },
    #[error("envelope amplitude {amplitude} is below 3x the median point sigma {floor}")]
    BelowNoiseFloor { amplitude: f64, floor: f64 },
    #[error("envelope maximum at {t} lies outside the sampled window [{start}, {end}]")]
    MaximumOutsideWindow { t: f64, start: f64, end: f64 },
}

impl EstimationError {
    /// Data problems that mean "no answer yet" rather than misuse.
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            EstimationError::BelowNoiseFloor { .. } | EstimationError::MaximumOutsideWindow { .. }
        )
    }
}

/// A fitted phase with its one-standard-error uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate<T> {
    /// Radians in `[0, 2π)`.
    pub phase: T,
    pub sigma: T,
    /// Number of sample times in the fit.
    pub n_samples_used: usize,
    /// Reduced chi-square of the fit (0 when there are no spare degrees of freedom).
    pub residual: T,
}
