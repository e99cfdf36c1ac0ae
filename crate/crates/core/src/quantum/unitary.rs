use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClockSpecies, ComplexAmp, QuantumError, SingleQubitState, TwoQubitState};
use crate::scalar::Real;

/// A validated 2×2 unitary, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitUnitary<T> {
    m: [[ComplexAmp<T>; 2]; 2],
}

impl<T: Real> SingleQubitUnitary<T> {
    /// Accepts `m` if `max |U†U - I| <= 1e-9`.
    pub fn new(m: [[ComplexAmp<T>; 2]; 2]) -> Result<Self, QuantumError> {
        let u = SingleQubitUnitary { m };
        if m.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(QuantumError::NonFinite);
        }
        let residual = u.unitarity_residual();
        if residual > super::tolerance::<T>(super::INPUT_TOLERANCE) {
            return Err(QuantumError::NonUnitary {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        Self::diagonal(T::zero(), T::zero())
    }

    /// `|0> -> |pos>`, `|1> -> |neg>`.
    pub fn hadamard() -> Self {
        let r = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        SingleQubitUnitary {
            m: [[r, r], [r, -r]],
        }
    }

    /// `diag(e^{iα}, e^{iβ})`.
    pub fn diagonal(alpha: T, beta: T) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        SingleQubitUnitary {
            m: [
                [Complex::from_polar(T::one(), alpha), zero],
                [zero, Complex::from_polar(T::one(), beta)],
            ],
        }
    }

    /// Clock time evolution over `dt` seconds, `diag(e^{-iΩdt/2}, e^{iΩdt/2})`.
    pub fn evolution(species: &ClockSpecies<T>, dt: T) -> Self {
        let half = species.omega() * dt * T::half();
        Self::diagonal(-half, half)
    }

    /// Haar-distributed unitary: a uniform point on SU(2) times a uniform
    /// global phase.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut q = [0.0f64; 4];
        let norm = loop {
            for x in q.iter_mut() {
                *x = StandardNormal.sample(rng);
            }
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break n;
            }
        };
        let q = q.map(|x| T::lit(x / norm));
        let gamma = T::lit(rng.random::<f64>() * std::f64::consts::TAU);
        let phase = Complex::from_polar(T::one(), gamma);
        let alpha = Complex::new(q[0], q[1]);
        let beta = Complex::new(q[2], q[3]);
        SingleQubitUnitary {
            m: [
                [alpha * phase, -beta.conj() * phase],
                [beta * phase, alpha.conj() * phase],
            ],
        }
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> ComplexAmp<T> {
        self.m[row][col]
    }

    pub fn det(&self) -> ComplexAmp<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `max_ij |(U†U - I)_ij|`.
    pub fn unitarity_residual(&self) -> T {
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..2 {
                    acc = acc + self.m[k][i].conj() * self.m[k][j];
                }
                if i == j {
                    acc = acc - Complex::new(T::one(), T::zero());
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn apply(&self, s: &SingleQubitState<T>) -> SingleQubitState<T> {
        SingleQubitState {
            a0: self.m[0][0] * s.a0 + self.m[0][1] * s.a1,
            a1: self.m[1][0] * s.a0 + self.m[1][1] * s.a1,
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut m = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.m[i][0] * other.m[0][j] + self.m[i][1] * other.m[1][j];
            }
        }
        SingleQubitUnitary { m }
    }

    fn revalidate(&self) -> Result<(), QuantumError> {
        Self::new(self.m).map(|_| ())
    }
}

/// `(U_A ⊗ U_B)|state>`.
pub fn apply_local<T: Real>(
    state: &TwoQubitState<T>,
    u_a: &SingleQubitUnitary<T>,
    u_b: &SingleQubitUnitary<T>,
) -> Result<TwoQubitState<T>, QuantumError> {
    u_a.revalidate()?;
    u_b.revalidate()?;
    let mut amps = [Complex::new(T::zero(), T::zero()); 4];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..2 {
                for j in 0..2 {
                    acc = acc + u_a.m[a][i] * u_b.m[b][j] * state.amp(i, j);
                }
            }
            amps[2 * a + b] = acc;
        }
    }
    Ok(TwoQubitState { amps })
}

/// Global phase picked up by the singlet under `U ⊗ U`: `arg(det U)` in `[0, 2π)`.
pub fn dark_state_phase<T: Real>(u: &SingleQubitUnitary<T>) -> Result<T, QuantumError> {
    u.revalidate()?;
    let d = u.det();
    Ok(d.im.atan2(d.re).wrap_tau())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{dual_basis_states, singlet_state, BasisPhase};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn rejects_non_unitary() {
        let one = Complex::new(1.0f64, 0.0);
        let zero = Complex::new(0.0, 0.0);
        let err = SingleQubitUnitary::new([[one, one], [zero, one]]).unwrap_err();
        assert!(matches!(err, QuantumError::NonUnitary { .. }));
        let tiny = Complex::new(1.0 + 1e-11, 0.0);
        assert!(SingleQubitUnitary::new([[tiny, zero], [zero, one]]).is_ok());
    }

    #[test]
    fn hadamard_maps_basis_to_dual() {
        let h = SingleQubitUnitary::<f64>::hadamard();
        let (pos, neg) = dual_basis_states(BasisPhase::zero());
        let hp = h.apply(&SingleQubitState::zero());
        let hn = h.apply(&SingleQubitState::one());
        // H|1> = |neg> exactly, not merely up to phase
        assert!((hp.inner(&pos).re - 1.0).abs() < 1e-15);
        assert!((hn.inner(&neg).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_leaves_state() {
        let s = singlet_state(0.4f64);
        let i = SingleQubitUnitary::identity();
        assert_eq!(apply_local(&s, &i, &i).unwrap(), s);
    }

    #[test]
    fn dark_phase_known_values() {
        assert_eq!(dark_state_phase(&SingleQubitUnitary::<f64>::identity()).unwrap(), 0.0);
        let h = dark_state_phase(&SingleQubitUnitary::<f64>::hadamard()).unwrap();
        assert!((h - PI).abs() < 1e-12);
        let d = dark_state_phase(&SingleQubitUnitary::diagonal(2.5f64, 4.0)).unwrap();
        assert!((d - (6.5 - std::f64::consts::TAU)).abs() < 1e-12);
    }

    #[test]
    fn singlet_is_dark_under_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = singlet_state(0.0f64);
        for _ in 0..200 {
            let u = SingleQubitUnitary::haar_random(&mut rng);
            assert!(u.unitarity_residual() < 1e-12);
            let out = apply_local(&s, &u, &u).unwrap();
            assert!((out.fidelity(&s) - 1.0).abs() < 1e-12);
            let phi = dark_state_phase(&u).unwrap();
            let expected = s.scale(Complex::from_polar(1.0, phi));
            assert!(out.sub(&expected).norm_sqr().sqrt() < 1e-12);
        }
    }

    #[test]
    fn eta_state_stationary_under_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let eta: f64 = rng.random::<f64>() * 6.0;
            let (a, b) = (rng.random::<f64>() * 6.0, rng.random::<f64>() * 6.0);
            let s = singlet_state(eta);
            let u = SingleQubitUnitary::diagonal(a, b);
            let out = apply_local(&s, &u, &u).unwrap();
            assert!((out.fidelity(&s) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_state_not_dark_under_hadamard() {
        let s = singlet_state(1.0f64);
        let h = SingleQubitUnitary::hadamard();
        let out = apply_local(&s, &h, &h).unwrap();
        assert!(out.fidelity(&s) < 0.99);
    }

    #[test]
    fn works_in_f32() {
        let s = singlet_state(0.0f32);
        let u = SingleQubitUnitary::<f32>::hadamard();
        let out = apply_local(&s, &u, &u).unwrap();
        assert!((out.fidelity(&s) - 1.0).abs() < 1e-6);
    }
}
