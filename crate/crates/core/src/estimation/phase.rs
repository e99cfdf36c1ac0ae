use super::linear::weighted_least_squares;
use super::{EstimationError, PhaseEstimate};
use crate::ensemble::PopulationSeries;
use crate::quantum::ClockSpecies;
use crate::scalar::Real;

/// Fits `p̂(t) = ½(1 + cos(Ωt + φ))` to the pos-frequencies of `series`.
///
/// The fit is weighted by batch size in the linear form
/// `c + a·cos Ωt + b·sin Ωt`, giving `φ = atan2(-b, a)`. `sigma` propagates
/// the binomial variance of the fitted fringe through the fit.
pub fn estimate_phase<T: Real>(
    series: &PopulationSeries<T>,
    species: &ClockSpecies<T>,
) -> Result<PhaseEstimate<T>, EstimationError> {
    if series.is_empty() {
        return Err(EstimationError::InvalidSeries("empty series".into()));
    }
    if let Some(p) = series.points.iter().find(|p| p.batch_size == 0) {
        return Err(EstimationError::InvalidSeries(format!(
            "batch_size 0 at t = {}",
            p.t
        )));
    }
    if let Some(p) = series
        .points
        .iter()
        .find(|p| p.count_pos + p.count_neg != p.batch_size)
    {
        return Err(EstimationError::InvalidSeries(format!(
            "counts do not add up to batch_size at t = {}",
            p.t
        )));
    }
    let omega = species.omega();
    let design: Vec<Vec<T>> = series
        .points
        .iter()
        .map(|p| {
            let x = (omega * p.t).wrap_tau();
            vec![T::one(), x.cos(), x.sin()]
        })
        .collect();
    let y: Vec<T> = series.points.iter().map(|p| p.frequency()).collect();
    let n: Vec<T> = series
        .points
        .iter()
        .map(|p| T::from_u64(p.batch_size).unwrap())
        .collect();
    let fit = weighted_least_squares(&design, &y, &n)?;

    // binomial variance of each point under the fitted fringe, kept off 0
    let var: Vec<T> = design
        .iter()
        .zip(&n)
        .map(|(row, &nk)| {
            let floor = T::half() / nk;
            let p = fit.predict(row).max(floor).min(T::one() - floor);
            p * (T::one() - p) / nk
        })
        .collect();
    let cov = fit.sandwich(&design, &n, &var);

    let (a, b) = (fit.coef[1], fit.coef[2]);
    let r2 = a * a + b * b;
    let phase = (-b).atan2(a).wrap_tau();
    let (da, db) = (b / r2, -a / r2);
    let var_phase = da * da * cov[1][1] + T::two() * da * db * cov[1][2] + db * db * cov[2][2];
    let sigma = var_phase.max(T::zero()).sqrt();

    let k = series.len();
    let residual = if k > 3 {
        let chi2 = design
            .iter()
            .zip(&y)
            .zip(&var)
            .fold(T::zero(), |acc, ((row, &yk), &vk)| {
                let d = yk - fit.predict(row);
                acc + d * d / vk
            });
        chi2 / T::from_usize(k - 3).unwrap()
    } else {
        T::zero()
    };

    Ok(PhaseEstimate {
        phase,
        sigma,
        n_samples_used: k,
        residual,
    })
}
