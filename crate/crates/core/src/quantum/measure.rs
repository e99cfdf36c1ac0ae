use num_complex::Complex;

use super::{
    dual_basis_states, BasisPhase, ClockSpecies, ComplexAmp, DualOutcome, Party, QuantumError,
    SingleQubitState, TwoQubitState,
};
use crate::scalar::Real;

/// Ramsey fringe `(P(pos), P(neg))` after `t` seconds of free evolution from
/// `|pos>`, read out in a dual basis rotated by `phase_offset`:
/// `P(pos) = ½(1 + cos(Ωt + phase_offset))`.
pub fn ramsey_probabilities<T: Real>(species: &ClockSpecies<T>, t: T, phase_offset: T) -> (T, T) {
    let arg = (species.omega() * t + phase_offset).wrap_tau();
    let p0 = (T::half() * (T::one() + arg.cos())).max(T::zero()).min(T::one());
    (p0, T::one() - p0)
}

/// Probability of `pos` when measuring a single qubit in the `phi` dual basis.
pub fn single_dual_probability<T: Real>(state: &SingleQubitState<T>, phi: BasisPhase<T>) -> T {
    let (pos, _) = dual_basis_states(phi);
    pos.inner(state).norm_sqr()
}

/// Unnormalized conditional state of the unmeasured qubit after projecting
/// `party`'s qubit onto `onto`.
fn project<T: Real>(
    state: &TwoQubitState<T>,
    party: Party,
    onto: &SingleQubitState<T>,
) -> [ComplexAmp<T>; 2] {
    let c = [onto.a0.conj(), onto.a1.conj()];
    let mut rest = [Complex::new(T::zero(), T::zero()); 2];
    for (k, r) in rest.iter_mut().enumerate() {
        *r = match party {
            Party::Alice => c[0] * state.amp(0, k) + c[1] * state.amp(1, k),
            Party::Bob => c[0] * state.amp(k, 0) + c[1] * state.amp(k, 1),
        };
    }
    rest
}

/// Probability that `party` sees `pos` when measuring in the `phi` dual basis.
pub fn dual_probability<T: Real>(state: &TwoQubitState<T>, party: Party, phi: BasisPhase<T>) -> T {
    let (pos, _) = dual_basis_states(phi);
    let r = project(state, party, &pos);
    r[0].norm_sqr() + r[1].norm_sqr()
}

/// Projective measurement of one party's qubit in the `phi` dual basis.
///
/// The outcome is `pos` iff `draw < P(pos)`; the returned post-measurement
/// state is the renormalized projection.
pub fn measure_dual<T: Real>(
    state: &TwoQubitState<T>,
    party: Party,
    phi: BasisPhase<T>,
    draw: T,
) -> Result<(DualOutcome, TwoQubitState<T>), QuantumError> {
    if !(draw >= T::zero() && draw < T::one()) {
        return Err(QuantumError::InvalidDraw {
            draw: draw.to_f64().unwrap_or(f64::NAN),
        });
    }
    let (pos, neg) = dual_basis_states(phi);
    let rest_pos = project(state, party, &pos);
    let p_pos = rest_pos[0].norm_sqr() + rest_pos[1].norm_sqr();
    let (outcome, basis, rest, p) = if draw < p_pos {
        (DualOutcome::Pos, pos, rest_pos, p_pos)
    } else {
        let rest_neg = project(state, party, &neg);
        let p_neg = rest_neg[0].norm_sqr() + rest_neg[1].norm_sqr();
        (DualOutcome::Neg, neg, rest_neg, p_neg)
    };
    if p < T::lit(super::BRANCH_TOLERANCE) {
        return Err(QuantumError::ImpossibleBranch {
            probability: p.to_f64().unwrap_or(f64::NAN),
        });
    }
    let other = SingleQubitState::normalized(rest[0], rest[1]);
    let post = match party {
        Party::Alice => basis.tensor(&other),
        Party::Bob => other.tensor(&basis),
    };
    Ok((outcome, post))
}
