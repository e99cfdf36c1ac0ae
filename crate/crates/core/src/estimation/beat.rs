use serde::{Deserialize, Serialize};

use super::linear::weighted_least_squares;
use super::{EstimationError, PhaseEstimate};
use crate::ensemble::PopulationSeries;
use crate::scalar::Real;

/// Per-time difference of two species' pos-frequencies, `p̂₁ - p̂₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatSeries<T> {
    times: Vec<T>,
    diff: Vec<T>,
    sigma_per_point: Vec<T>,
}

impl<T: Real> BeatSeries<T> {
    pub fn new(times: Vec<T>, diff: Vec<T>, sigma_per_point: Vec<T>) -> Result<Self, EstimationError> {
        if times.len() != diff.len() || times.len() != sigma_per_point.len() {
            return Err(EstimationError::InvalidSeries("length mismatch".into()));
        }
        if diff.iter().any(|d| !(d.abs() <= T::one())) {
            return Err(EstimationError::InvalidSeries("|diff| must be <= 1".into()));
        }
        if sigma_per_point.iter().any(|s| !(*s > T::zero() && s.is_finite())) {
            return Err(EstimationError::InvalidSeries("point sigmas must be positive".into()));
        }
        Ok(BeatSeries {
            times,
            diff,
            sigma_per_point,
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn diff(&self) -> &[T] {
        &self.diff
    }

    pub fn sigma_per_point(&self) -> &[T] {
        &self.sigma_per_point
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A time on a party's clock with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeEstimate<T> {
    pub t: T,
    pub sigma: T,
}

/// Envelope model `E·sin(½(Ω₁-Ω₂)t + ψ_env)·sin(½(Ω₁+Ω₂)t + ψ_fast)`.
///
/// `envelope.phase` is `ψ_env` reduced to `[0, π)`: flipping the sign of both
/// sine factors leaves the product unchanged, so only the envelope magnitude
/// and its phase modulo π are observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit<T> {
    pub envelope: PhaseEstimate<T>,
    pub fast_phase: T,
    pub amplitude: T,
}

fn smoothed_variance<T: Real>(count: u64, n: u64) -> T {
    let nf = T::from_u64(n).unwrap();
    let p = (T::from_u64(count).unwrap() + T::half()) / (nf + T::one());
    p * (T::one() - p) / nf
}

/// `p̂₁(t_k) - p̂₂(t_k)` on a shared time grid, with binomial point sigmas.
pub fn beat_difference<T: Real>(
    series1: &PopulationSeries<T>,
    series2: &PopulationSeries<T>,
) -> Result<BeatSeries<T>, EstimationError> {
    if series1.len() != series2.len()
        || series1
            .points
            .iter()
            .zip(&series2.points)
            .any(|(a, b)| a.t != b.t)
    {
        return Err(EstimationError::GridMismatch);
    }
    let mut times = Vec::with_capacity(series1.len());
    let mut diff = Vec::with_capacity(series1.len());
    let mut sigma = Vec::with_capacity(series1.len());
    for (a, b) in series1.points.iter().zip(&series2.points) {
        if a.batch_size == 0 || b.batch_size == 0 {
            return Err(EstimationError::InvalidSeries(format!(
                "batch_size 0 at t = {}",
                a.t
            )));
        }
        times.push(a.t);
        diff.push(a.frequency() - b.frequency());
        let v = smoothed_variance::<T>(a.count_pos, a.batch_size)
            + smoothed_variance::<T>(b.count_pos, b.batch_size);
        sigma.push(v.sqrt());
    }
    BeatSeries::new(times, diff, sigma)
}

fn median<T: Real>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) * T::half()
    }
}

/// Fits the beat envelope in two stages.
///
/// Stage one is a joint weighted fit of the two carrier tones,
/// `diff = c + Σᵢ aᵢ cos Ωᵢt + bᵢ sin Ωᵢt`, which is exact for the product model
/// because `½(cos(Ω₁t+θ₁) - cos(Ω₂t+θ₂)) = -sin(½(Ω₁+Ω₂)t + ½(θ₁+θ₂))·sin(½(Ω₁-Ω₂)t + ½(θ₁-θ₂))`.
/// Stage two maps the tone phases `θᵢ` to `ψ_env = ½(θ₁-θ₂)` and `ψ_fast`,
/// propagating the joint covariance. A common offset added to both `θᵢ`
/// cancels in `ψ_env`.
pub fn envelope_fit<T: Real>(
    beats: &BeatSeries<T>,
    omega1: T,
    omega2: T,
) -> Result<EnvelopeFit<T>, EstimationError> {
    if omega1 == omega2 {
        return Err(EstimationError::SameFrequency);
    }
    if beats.len() < 5 {
        return Err(EstimationError::RankDeficient);
    }
    if beats.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(EstimationError::InvalidSeries(
            "times must be strictly increasing".into(),
        ));
    }
    let limit = T::PI() / (omega1.abs() + omega2.abs());
    let spacing = beats
        .times
        .windows(2)
        .fold(T::zero(), |m, w| m.max(w[1] - w[0]));
    if spacing >= limit {
        return Err(EstimationError::UnderResolved {
            spacing: spacing.to_f64().unwrap(),
            limit: limit.to_f64().unwrap(),
        });
    }

    let design: Vec<Vec<T>> = beats
        .times
        .iter()
        .map(|&t| {
            let x1 = (omega1 * t).wrap_tau();
            let x2 = (omega2 * t).wrap_tau();
            vec![T::one(), x1.cos(), x1.sin(), x2.cos(), x2.sin()]
        })
        .collect();
    // Unit weights: sigmas estimated from p̂ collapse near p̂ ∈ {0, 1} and
    // would dominate the fit. They enter only through the covariance.
    let var: Vec<T> = beats.sigma_per_point.iter().map(|s| *s * *s).collect();
    let w = vec![T::one(); beats.len()];
    let fit = weighted_least_squares(&design, &beats.diff, &w)?;
    let cov = fit.sandwich(&design, &w, &var);

    let (a1, b1, a2, b2) = (fit.coef[1], fit.coef[2], fit.coef[3], fit.coef[4]);
    // tone 1 = ½cos(Ω₁t+θ₁), tone 2 = -½cos(Ω₂t+θ₂)
    let theta1 = (-b1).atan2(a1);
    let theta2 = b2.atan2(-a2);
    let r1 = (a1 * a1 + b1 * b1).sqrt();
    let r2 = (a2 * a2 + b2 * b2).sqrt();
    let amplitude = r1 + r2;

    let floor = T::lit(3.0) * median(&beats.sigma_per_point);
    if amplitude < floor {
        return Err(EstimationError::BelowNoiseFloor {
            amplitude: amplitude.to_f64().unwrap(),
            floor: floor.to_f64().unwrap(),
        });
    }

    // gradient of ½(θ₁ - θ₂) with respect to (a1, b1, a2, b2)
    let g = [
        T::half() * b1 / (r1 * r1),
        -T::half() * a1 / (r1 * r1),
        -T::half() * b2 / (r2 * r2),
        T::half() * a2 / (r2 * r2),
    ];
    let mut var_env = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            var_env = var_env + g[i] * g[j] * cov[i + 1][j + 1];
        }
    }

    let env = ((theta1 - theta2) * T::half()) % T::PI();
    let env = if env < T::zero() { env + T::PI() } else { env };
    let env = if env >= T::PI() { T::zero() } else { env };
    let fast = ((theta1 + theta2) * T::half() + T::PI()).wrap_tau();

    let k = beats.len();
    let chi2 = design
        .iter()
        .zip(&beats.diff)
        .zip(&var)
        .fold(T::zero(), |acc, ((row, &y), &vk)| {
            let d = y - fit.predict(row);
            acc + d * d / vk
        });
    let residual = chi2 / T::from_usize(k - 5).unwrap().max(T::one());

    Ok(EnvelopeFit {
        envelope: PhaseEstimate {
            phase: env,
            sigma: var_env.max(T::zero()).sqrt(),
            n_samples_used: k,
            residual,
        },
        fast_phase: fast,
        amplitude,
    })
}

/// Envelope phase `ψ_env ∈ [0, π)` of the beats between `omega1` and `omega2`.
pub fn envelope_phase<T: Real>(
    beats: &BeatSeries<T>,
    omega1: T,
    omega2: T,
) -> Result<PhaseEstimate<T>, EstimationError> {
    envelope_fit(beats, omega1, omega2).map(|f| f.envelope)
}

/// First time `>= t_from` at which `|sin(½(Ω₁-Ω₂)t + ψ_env)|` peaks.
pub fn envelope_maximum_after<T: Real>(
    envelope: &PhaseEstimate<T>,
    omega1: T,
    omega2: T,
    t_from: T,
) -> TimeEstimate<T> {
    let a = T::half() * (omega1 - omega2);
    let spacing = T::PI() / a.abs();
    let base = (T::FRAC_PI_2() - envelope.phase) / a;
    let mut off = (base - t_from) % spacing;
    if off < T::zero() {
        off = off + spacing;
    }
    TimeEstimate {
        t: t_from + off,
        sigma: envelope.sigma / a.abs(),
    }
}

/// Common time origin: the first maximum (after the local zero) of the fitted
/// beat envelope between `omega1` and `omega1 + delta_omega`. Noiseless
/// answer `π / ΔΩ`.
pub fn first_envelope_maximum<T: Real>(
    beats: &BeatSeries<T>,
    omega1: T,
    delta_omega: T,
) -> Result<TimeEstimate<T>, EstimationError> {
    let omega2 = omega1 + delta_omega;
    let fit = envelope_fit(beats, omega1, omega2)?;
    let est = envelope_maximum_after(&fit.envelope, omega1, omega2, T::zero());
    let (start, end) = (beats.times[0], beats.times[beats.len() - 1]);
    if est.t < start || est.t > end {
        return Err(EstimationError::MaximumOutsideWindow {
            t: est.t.to_f64().unwrap(),
            start: start.to_f64().unwrap(),
            end: end.to_f64().unwrap(),
        });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::PopulationPoint;
    use std::f64::consts::PI;

    const BIG: u64 = 1_000_000_000_000;

    fn noiseless(omega: f64, offset: f64, times: &[f64]) -> PopulationSeries<f64> {
        PopulationSeries {
            points: times
                .iter()
                .map(|&t| {
                    let p = 0.5 * (1.0 + (omega * t + offset).cos());
                    let pos = (p * BIG as f64).round() as u64;
                    PopulationPoint { t, count_pos: pos, count_neg: BIG - pos, batch_size: BIG }
                })
                .collect(),
        }
    }

    fn grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect()
    }

    fn circ_pi(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    fn beats(o1: f64, o2: f64, delta: f64, times: &[f64]) -> BeatSeries<f64> {
        beat_difference(&noiseless(o1, delta, times), &noiseless(o2, delta, times)).unwrap()
    }

    #[test]
    fn zero_at_epoch_and_trig_identity() {
        let times = grid(0.0, 10.0, 41);
        for delta in [0.0, 1.3, 2.9] {
            let b = beats(1.0, 1.3, delta, &times);
            assert!(b.diff()[0].abs() < 1e-11);
            for (t, d) in b.times().iter().zip(b.diff()) {
                let expected = 0.5 * ((1.0 * t + delta).cos() - (1.3 * t + delta).cos());
                assert!((d - expected).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn swapping_negates() {
        let times = grid(0.0, 5.0, 11);
        let s1 = noiseless(1.0, 0.2, &times);
        let s2 = noiseless(2.0, 0.2, &times);
        let ab = beat_difference(&s1, &s2).unwrap();
        let ba = beat_difference(&s2, &s1).unwrap();
        for (x, y) in ab.diff().iter().zip(ba.diff()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let s1 = noiseless(1.0, 0.0, &grid(0.0, 5.0, 11));
        let s2 = noiseless(1.0, 0.0, &grid(0.0, 5.5, 11));
        assert_eq!(beat_difference(&s1, &s2), Err(EstimationError::GridMismatch));
        let s3 = noiseless(1.0, 0.0, &grid(0.0, 5.0, 10));
        assert_eq!(beat_difference(&s1, &s3), Err(EstimationError::GridMismatch));
    }

    #[test]
    fn noiseless_envelope_phase_is_zero_for_any_delta() {
        let times = grid(0.0, 25.0, 120);
        for k in 0..16 {
            let delta = k as f64 * 2.0 * PI / 16.0;
            let env = envelope_phase(&beats(1.0, 1.2, delta, &times), 1.0, 1.2).unwrap();
            assert!(circ_pi(env.phase, 0.0) < 1e-6, "delta {delta}: {}", env.phase);
        }
        let env = envelope_phase(&beats(1.0, 1.2, 2.0, &times), 1.0, 1.2).unwrap();
        assert!(circ_pi(env.phase, 0.0) < 1e-6);
    }

    #[test]
    fn envelope_tracks_a_clock_offset() {
        // a reader whose clock is ahead by d sees both tones at t - d
        let times = grid(0.0, 25.0, 120);
        let d = 1.7;
        let fit = envelope_fit(&beats_shifted(1.0, 1.2, d, &times), 1.0, 1.2).unwrap();
        let expected = (0.5 * (1.0 - 1.2) * -d).rem_euclid(PI);
        assert!(circ_pi(fit.envelope.phase, expected) < 1e-6);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
    }

    fn beats_shifted(o1: f64, o2: f64, d: f64, times: &[f64]) -> BeatSeries<f64> {
        beat_difference(&noiseless(o1, -o1 * d, times), &noiseless(o2, -o2 * d, times)).unwrap()
    }

    #[test]
    fn first_maximum_noiseless() {
        let times = grid(0.0, 20.0, 100);
        let t = first_envelope_maximum(&beats(1.0, 1.2, 0.0, &times), 1.0, 0.2).unwrap();
        assert!((t.t - PI / 0.2).abs() < 1e-6, "{}", t.t);
        let t2 = first_envelope_maximum(&beats(1.0, 1.4, 0.0, &times), 1.0, 0.4).unwrap();
        assert!((t2.t - t.t / 2.0).abs() < 1e-6);
    }

    #[test]
    fn first_maximum_outside_window() {
        let times = grid(0.0, 10.0, 60);
        let err = first_envelope_maximum(&beats(1.0, 1.2, 0.0, &times), 1.0, 0.2).unwrap_err();
        assert!(matches!(err, EstimationError::MaximumOutsideWindow { .. }));
        assert!(err.is_inconclusive());
    }

    #[test]
    fn maximum_after_handles_sign_of_detuning() {
        let env = PhaseEstimate { phase: 0.0, sigma: 0.01, n_samples_used: 10, residual: 1.0 };
        let up = envelope_maximum_after(&env, 1.0, 1.2, 0.0);
        let down = envelope_maximum_after(&env, 1.2, 1.0, 0.0);
        assert!((up.t - PI / 0.2).abs() < 1e-9 && (down.t - PI / 0.2).abs() < 1e-9);
        assert!((up.sigma - 0.1).abs() < 1e-12);
    }

    #[test]
    fn under_resolved_and_degenerate() {
        let coarse = grid(0.0, 20.0, 12);
        assert!(matches!(
            envelope_phase(&beats(1.0, 1.2, 0.0, &coarse), 1.0, 1.2),
            Err(EstimationError::UnderResolved { .. })
        ));
        let fine = grid(0.0, 20.0, 100);
        assert_eq!(
            envelope_phase(&beats(1.0, 1.2, 0.0, &fine), 1.0, 1.0),
            Err(EstimationError::SameFrequency)
        );
    }

    #[test]
    fn flat_beats_are_below_noise_floor() {
        let times = grid(0.0, 20.0, 100);
        let b = BeatSeries::new(times.clone(), vec![0.0; 100], vec![0.05; 100]).unwrap();
        assert!(matches!(
            envelope_phase(&b, 1.0, 1.2),
            Err(EstimationError::BelowNoiseFloor { .. })
        ));
    }

    #[test]
    fn beat_series_validates() {
        assert!(BeatSeries::new(vec![0.0], vec![1.5], vec![0.1]).is_err());
        assert!(BeatSeries::new(vec![0.0], vec![0.5], vec![0.0]).is_err());
        assert!(BeatSeries::new(vec![0.0, 1.0], vec![0.5], vec![0.1]).is_err());
    }
}
