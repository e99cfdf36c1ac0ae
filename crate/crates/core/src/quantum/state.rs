use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{BasisPhase, ClockSpecies, ComplexAmp, QuantumError};
use crate::scalar::Real;

/// Pure state of one qubit in the energy basis `{|0>, |1>}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitState<T> {
    pub a0: ComplexAmp<T>,
    pub a1: ComplexAmp<T>,
}

impl<T: Real> SingleQubitState<T> {
    /// Builds a state, rejecting non-finite or non-normalized amplitudes.
    pub fn new(a0: ComplexAmp<T>, a1: ComplexAmp<T>) -> Result<Self, QuantumError> {
        let s = SingleQubitState { a0, a1 };
        check_amps(&[a0, a1])?;
        Ok(s)
    }

    pub fn zero() -> Self {
        SingleQubitState {
            a0: Complex::new(T::one(), T::zero()),
            a1: Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn one() -> Self {
        SingleQubitState {
            a0: Complex::new(T::zero(), T::zero()),
            a1: Complex::new(T::one(), T::zero()),
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> ComplexAmp<T> {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm()
    }

    /// `|self> ⊗ |other>` with `self` as party A.
    pub fn tensor(&self, other: &Self) -> TwoQubitState<T> {
        TwoQubitState {
            amps: [
                self.a0 * other.a0,
                self.a0 * other.a1,
                self.a1 * other.a0,
                self.a1 * other.a1,
            ],
        }
    }

    pub(crate) fn normalized(a0: ComplexAmp<T>, a1: ComplexAmp<T>) -> Self {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        SingleQubitState {
            a0: a0 / n,
            a1: a1 / n,
        }
    }
}

/// Pure joint state of an Alice/Bob pair, amplitudes ordered
/// `|00>, |01>, |10>, |11>` with Alice's qubit first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState<T> {
    pub amps: [ComplexAmp<T>; 4],
}

impl<T: Real> TwoQubitState<T> {
    pub fn new(amps: [ComplexAmp<T>; 4]) -> Result<Self, QuantumError> {
        check_amps(&amps)?;
        Ok(TwoQubitState { amps })
    }

    #[inline]
    pub fn amp(&self, a: usize, b: usize) -> ComplexAmp<T> {
        self.amps[2 * a + b]
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn inner(&self, other: &Self) -> ComplexAmp<T> {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
                acc + x.conj() * y
            })
    }

    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm()
    }

    pub fn scale(&self, z: ComplexAmp<T>) -> Self {
        TwoQubitState {
            amps: self.amps.map(|a| a * z),
        }
    }

    #[cfg(test)]
    pub(crate) fn sub(&self, other: &Self) -> Self {
        let mut amps = self.amps;
        for (a, b) in amps.iter_mut().zip(other.amps.iter()) {
            *a = *a - *b;
        }
        TwoQubitState { amps }
    }
}

fn check_amps<T: Real>(amps: &[ComplexAmp<T>]) -> Result<(), QuantumError> {
    if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(QuantumError::NonFinite);
    }
    let n = amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let residual = (n - T::one()).abs();
    if residual > super::tolerance::<T>(super::UNIT_TOLERANCE) {
        return Err(QuantumError::NotNormalized {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// `(|pos_φ>, |neg_φ>)` with `|pos_φ> = (|0> + e^{iφ}|1>)/√2` and
/// `|neg_φ> = (|0> - e^{iφ}|1>)/√2`.
pub fn dual_basis_states<T: Real>(phi: BasisPhase<T>) -> (SingleQubitState<T>, SingleQubitState<T>) {
    let r = T::FRAC_1_SQRT_2();
    let a0 = Complex::new(r, T::zero());
    let a1 = Complex::from_polar(r, phi.radians());
    (
        SingleQubitState { a0, a1 },
        SingleQubitState { a0, a1: -a1 },
    )
}

/// Free evolution under the clock Hamiltonian for `dt` seconds:
/// `a0 -> e^{-iΩdt/2} a0`, `a1 -> e^{+iΩdt/2} a1`. Negative `dt` runs backwards.
pub fn evolve<T: Real>(
    state: &SingleQubitState<T>,
    species: &ClockSpecies<T>,
    dt: T,
) -> SingleQubitState<T> {
    let half = species.omega() * dt * T::half();
    SingleQubitState {
        a0: state.a0 * Complex::from_polar(T::one(), -half),
        a1: state.a1 * Complex::from_polar(T::one(), half),
    }
}

/// `(|01> - e^{iη}|10>)/√2`; `eta = 0` is the singlet.
pub fn singlet_state<T: Real>(eta: T) -> TwoQubitState<T> {
    let r = T::FRAC_1_SQRT_2();
    let zero = Complex::new(T::zero(), T::zero());
    TwoQubitState {
        amps: [
            zero,
            Complex::new(r, T::zero()),
            -Complex::from_polar(r, eta),
            zero,
        ],
    }
}
