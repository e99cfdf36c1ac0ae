//! Einstein synchronization through a fluctuating medium.
//!
//! Alice's clock is the reference. She emits a pulse at her `t = 0`, Bob
//! stamps its arrival on his clock and reflects it, and Alice stamps the
//! return. Bob's offset estimate is his stamp minus the midpoint of Alice's
//! two stamps. Each leg's refractive index is an independent Gaussian draw
//! (truncated at 1), so the estimate is off by half the leg asymmetry.
//! Arrival-time noise of the pulses themselves is an extra additive Gaussian
//! term per leg (`pulse_jitter_sigma`).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MediumError {
    #[error("distance must be finite and > 0, got {0}")]
    Distance(f64),
    #[error("mean_index must be >= 1, got {0}")]
    MeanIndex(f64),
    #[error("index_fluctuation_sigma must be >= 0, got {0}")]
    Sigma(f64),
    #[error("correlation_time must be >= 0, got {0}")]
    CorrelationTime(f64),
    #[error("pulse_jitter_sigma must be >= 0, got {0}")]
    PulseJitter(f64),
}

/// Line-of-sight medium between the two clocks.
///
/// `correlation_time` is carried for a future correlated-index model; legs are
/// currently independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumModel {
    pub distance: f64,
    pub mean_index: f64,
    pub index_fluctuation_sigma: f64,
    #[serde(default)]
    pub correlation_time: f64,
    /// Seconds of Gaussian arrival-time noise per leg.
    #[serde(default)]
    pub pulse_jitter_sigma: f64,
}

impl MediumModel {
    pub fn new(distance: f64, mean_index: f64, index_fluctuation_sigma: f64) -> Result<Self, MediumError> {
        let m = MediumModel {
            distance,
            mean_index,
            index_fluctuation_sigma,
            correlation_time: 0.0,
            pulse_jitter_sigma: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MediumError> {
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(MediumError::Distance(self.distance));
        }
        if !(self.mean_index.is_finite() && self.mean_index >= 1.0) {
            return Err(MediumError::MeanIndex(self.mean_index));
        }
        if !(self.index_fluctuation_sigma.is_finite() && self.index_fluctuation_sigma >= 0.0) {
            return Err(MediumError::Sigma(self.index_fluctuation_sigma));
        }
        if !(self.correlation_time.is_finite() && self.correlation_time >= 0.0) {
            return Err(MediumError::CorrelationTime(self.correlation_time));
        }
        if !(self.pulse_jitter_sigma.is_finite() && self.pulse_jitter_sigma >= 0.0) {
            return Err(MediumError::PulseJitter(self.pulse_jitter_sigma));
        }
        Ok(())
    }

    /// One-way transit time at refractive index `n`.
    pub fn transit_time(&self, n: f64) -> f64 {
        self.distance * n / SPEED_OF_LIGHT
    }

    /// Transit time of one leg: index draw, then arrival-time noise.
    fn draw_leg<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let n = (self.mean_index + self.index_fluctuation_sigma * z).max(1.0);
        let jitter: f64 = StandardNormal.sample(rng);
        self.transit_time(n) + self.pulse_jitter_sigma * jitter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub estimated_offset: f64,
    pub true_offset: f64,
    pub error: f64,
}

/// One round-trip exchange. `true_offset` is Bob's clock minus Alice's.
pub fn einstein_sync<R: Rng + ?Sized>(medium: &MediumModel, true_offset: f64, rng: &mut R) -> BaselineResult {
    let out_leg = medium.draw_leg(rng);
    let back_leg = medium.draw_leg(rng);
    // Bob stamps `out_leg + true_offset`, Alice's midpoint is
    // `(out_leg + back_leg) / 2`. Subtracting leg by leg keeps symmetric
    // exchanges exact in floating point.
    let estimated_offset = true_offset + 0.5 * (out_leg - back_leg);
    BaselineResult {
        estimated_offset,
        true_offset,
        error: estimated_offset - true_offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn quiet_medium_is_exact() {
        let mut rng = stream(1, 0);
        for distance in [1.0, 2.0e7, 3.7e5, 1.0e9] {
            let m = MediumModel::new(distance, 1.0003, 0.0).unwrap();
            for off in [0.0, 0.25, -2.0] {
                let r = einstein_sync(&m, off, &mut rng);
                assert_eq!(r.error, 0.0, "distance {distance} offset {off}");
            }
        }
    }

    #[test]
    fn one_light_second() {
        let m = MediumModel::new(SPEED_OF_LIGHT, 1.0, 0.0).unwrap();
        assert_eq!(m.transit_time(1.0), 1.0);
    }

    #[test]
    fn fluctuations_cause_error() {
        let m = MediumModel::new(2.0e7, 1.0003, 1e-4).unwrap();
        let mut rng = stream(2, 0);
        let errs: Vec<f64> = (0..200).map(|_| einstein_sync(&m, 0.0, &mut rng).error).collect();
        assert!(errs.iter().any(|e| *e != 0.0));
        // half the leg asymmetry: |error| <= d·σ·(few)/c
        assert!(errs.iter().all(|e| e.abs() < 2.0e7 * 1e-3 / SPEED_OF_LIGHT));
    }

    #[test]
    fn pulse_jitter_alone_causes_error() {
        let mut m = MediumModel::new(1e3, 1.0, 0.0).unwrap();
        m.pulse_jitter_sigma = 1e-9;
        let mut rng = stream(5, 0);
        let errs: Vec<f64> = (0..2000).map(|_| einstein_sync(&m, 0.0, &mut rng).error).collect();
        // error = (j_out - j_back)/2, so its std is σ/√2
        let s = crate::stats::std_dev(&errs);
        assert!((s / (1e-9 / 2f64.sqrt()) - 1.0).abs() < 0.1, "{s}");
    }

    #[test]
    fn rejects_bad_media() {
        assert!(MediumModel::new(0.0, 1.0, 0.0).is_err());
        assert!(MediumModel::new(1.0, 0.9, 0.0).is_err());
        assert!(MediumModel::new(1.0, 1.0, -0.1).is_err());
    }
}
