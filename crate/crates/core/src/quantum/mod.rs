//! Exact two-level and two-qubit quantum mechanics for the pre-clock pairs.
//!
//! States are compared as rays: use [`SingleQubitState::fidelity`] or
//! [`TwoQubitState::fidelity`] rather than amplitude equality.

mod measure;
mod state;
mod unitary;

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use measure::{dual_probability, measure_dual, ramsey_probabilities, single_dual_probability};
pub use state::{dual_basis_states, evolve, singlet_state, SingleQubitState, TwoQubitState};
pub use unitary::{apply_local, dark_state_phase, SingleQubitUnitary};

/// `base` at 64-bit precision, loosened to a few ulps for narrower scalars.
pub(crate) fn tolerance<T: Real>(base: f64) -> T {
    T::lit(base).max(T::epsilon() * T::lit(64.0))
}

/// Complex amplitude.
pub type ComplexAmp<T> = Complex<T>;

/// Tolerance for norm and unitarity of internally produced objects.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Tolerance for validating user-supplied matrices.
pub const INPUT_TOLERANCE: f64 = 1e-9;
/// Branch probabilities below this are treated as impossible.
pub const BRANCH_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("matrix is not unitary: max |U^dagger U - I| = {residual:e}")]
    NonUnitary { residual: f64 },
    #[error("state is not normalized: |norm^2 - 1| = {residual:e}")]
    NotNormalized { residual: f64 },
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("drawn measurement branch has probability {probability:e}")]
    ImpossibleBranch { probability: f64 },
    #[error("draw {draw} is outside [0, 1)")]
    InvalidDraw { draw: f64 },
    #[error("species `{name}` has non-positive or non-finite angular frequency {omega}")]
    InvalidSpecies { name: String, omega: f64 },
}

/// One of the two parties holding a half of each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    #[serde(rename = "A")]
    Alice,
    #[serde(rename = "B")]
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "A",
            Party::Bob => "B",
        })
    }
}

/// Outcome of a measurement in a dual (equatorial) basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualOutcome {
    Pos,
    Neg,
}

/// Choice of `|pos>` on the Bloch equator, as an angle in `[0, 2π)`.
///
/// Two parties that lock different values see their clocks offset by the
/// difference of the angles.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisPhase<T>(T);

impl<T: Real> BasisPhase<T> {
    pub fn new(phi: T) -> Self {
        BasisPhase(phi.wrap_tau())
    }

    pub fn zero() -> Self {
        BasisPhase(T::zero())
    }

    #[inline]
    pub fn radians(self) -> T {
        self.0
    }

    /// `self - other`, normalized.
    pub fn minus(self, other: BasisPhase<T>) -> BasisPhase<T> {
        BasisPhase::new(self.0 - other.0)
    }

    pub fn shifted(self, by: T) -> BasisPhase<T> {
        BasisPhase::new(self.0 + by)
    }
}

/// A clock transition: a named two-level system with angular frequency
/// `omega = (E1 - E0) / hbar` in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockSpecies<T> {
    name: String,
    omega: T,
}

impl<T: Real> ClockSpecies<T> {
    pub fn new(name: impl Into<String>, omega: T) -> Result<Self, QuantumError> {
        let name = name.into();
        if !(omega.is_finite() && omega > T::zero()) {
            return Err(QuantumError::InvalidSpecies {
                name,
                omega: omega.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(ClockSpecies { name, omega })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn omega(&self) -> T {
        self.omega
    }

    /// Oscillation period `2π / omega` in seconds.
    pub fn period(&self) -> T {
        T::TAU() / self.omega
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn basis_phase_normalizes() {
        let p = BasisPhase::new(-0.5f64);
        assert!((p.radians() - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(BasisPhase::new(TAU).radians(), 0.0);
        let d = BasisPhase::new(0.2f64).minus(BasisPhase::new(0.9));
        assert!((d.radians() - (TAU - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn species_rejects_bad_omega() {
        assert!(ClockSpecies::new("x", 0.0f64).is_err());
        assert!(ClockSpecies::new("x", -1.0f64).is_err());
        assert!(ClockSpecies::new("x", f64::NAN).is_err());
        let s = ClockSpecies::new("cs", 2.0f64).unwrap();
        assert!((s.period() - std::f64::consts::PI).abs() < 1e-15);
    }
}
