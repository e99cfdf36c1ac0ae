//! What one party holds: its config, clock, measurement streams, sub-ensemble
//! handles and the counts it has recorded. Nothing here refers to the other
//! party.

use crate::ensemble::{
    Ensemble, EnsembleError, LocalClock, PopulationPoint, PopulationSeries, SamplingSchedule,
    SubensembleHandle,
};
use crate::quantum::BasisPhase;
use crate::rng::SimRng;

use super::{PartyConfig, ProtocolError};

pub(crate) struct Lane {
    pub phase: BasisPhase<f64>,
    pub rng: SimRng,
    pub schedule: SamplingSchedule<f64>,
    pub handle: Option<SubensembleHandle>,
    pub series: PopulationSeries<f64>,
}

pub(crate) struct Station {
    pub clock: LocalClock<f64>,
    pub lanes: Vec<Lane>,
}

/// Smallest whole number of periods that moves `first` to or past `earliest`.
pub(crate) fn period_shift(first: f64, earliest: f64, period: f64) -> u64 {
    if first >= earliest {
        return 0;
    }
    let mut m = ((earliest - first) / period).ceil().max(0.0) as u64;
    while first + period * (m as f64) < earliest {
        m += 1;
    }
    m
}

impl Station {
    pub fn new(
        config: &PartyConfig,
        species: &[&str],
        schedules: Vec<SamplingSchedule<f64>>,
        rngs: Vec<SimRng>,
    ) -> Result<Self, ProtocolError> {
        let lanes = species
            .iter()
            .zip(schedules)
            .zip(rngs)
            .map(|((name, schedule), rng)| {
                Ok(Lane {
                    phase: config.phase_for(name)?,
                    rng,
                    schedule,
                    handle: None,
                    series: PopulationSeries::default(),
                })
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        Ok(Station {
            clock: LocalClock::new(config.local_clock_offset),
            lanes,
        })
    }

    /// Takes ownership of the sub-ensemble for lane `s` and plans readouts no
    /// earlier than local time `earliest`. Returns the local readout times.
    pub fn begin_sampling(
        &mut self,
        s: usize,
        handle: SubensembleHandle,
        earliest: f64,
        period: f64,
    ) -> Result<Vec<f64>, EnsembleError> {
        let lane = &mut self.lanes[s];
        if lane.schedule.budget() > handle.remaining() {
            return Err(EnsembleError::BudgetExhausted {
                needed: lane.schedule.budget(),
                available: handle.remaining(),
            });
        }
        let first = lane.schedule.times().first().copied().unwrap_or(earliest);
        let shift = period_shift(first, earliest, period);
        lane.schedule = lane.schedule.clone().with_period_shift(shift);
        lane.handle = Some(handle);
        Ok((0..lane.schedule.times().len())
            .map(|k| lane.schedule.actual_time(k, period))
            .collect())
    }

    /// Reads out batch `k` of lane `s`.
    pub fn sample_batch(
        &mut self,
        s: usize,
        k: usize,
        ensemble: &mut Ensemble<f64>,
        party: crate::quantum::Party,
    ) -> Result<PopulationPoint<f64>, EnsembleError> {
        let clock = self.clock;
        let lane = &mut self.lanes[s];
        let one = SamplingSchedule::new(vec![lane.schedule.times()[k]], lane.schedule.batch_size())?;
        let handle = lane.handle.as_mut().expect("sampling starts only after begin_sampling");
        let series = ensemble.sample_population(handle, &one, party, lane.phase, clock, &mut lane.rng)?;
        let point = series.points[0];
        lane.series.points.push(point);
        Ok(point)
    }
}
