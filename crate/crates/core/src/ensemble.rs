//! Labelled ensembles of pre-clock pairs and their destructive readout.
//!
//! An [`Ensemble`] holds both halves of every pair. Alice's collapse tags each
//! pair Type-I (`|pos>_A|neg>_B`) or Type-II (`|neg>_A|pos>_B`); afterwards each
//! pair can be measured exactly once by either party. Outcomes are drawn from
//! the closed-form single-pair distribution in [`pos_probability`], which the
//! tests check against the state-vector path in [`crate::quantum`].

use std::io;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    self, dual_probability, measure_dual, singlet_state, BasisPhase, ClockSpecies, DualOutcome,
    Party, QuantumError, SingleQubitUnitary,
};
use crate::scalar::Real;

static NEXT_ENSEMBLE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("an ensemble needs at least one pair")]
    Empty,
    #[error("pair {label} was already collapsed")]
    AlreadyCollapsed { label: PairLabel },
    #[error("label {label} is not in the ensemble")]
    UnknownLabel { label: PairLabel },
    #[error("label {label} listed twice")]
    DuplicateLabel { label: PairLabel },
    #[error("pair {label} is still entangled and idle")]
    IdlePair { label: PairLabel },
    #[error("pair {label} was already consumed")]
    ConsumedPair { label: PairLabel },
    #[error("schedule needs {needed} pairs but only {available} remain")]
    BudgetExhausted { needed: usize, available: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("handle belongs to a different ensemble")]
    ForeignHandle,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Label shared by both halves of a pair; labels run `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairLabel(u64);

impl PairLabel {
    pub fn new(n: u64) -> Option<Self> {
        (n >= 1).then_some(PairLabel(n))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for PairLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairType {
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "II")]
    TypeII,
}

/// Lifecycle of a pair: idle, then collapsed, then consumed. Never backwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairState<T> {
    EntangledIdle { eta: T },
    TypeI { t0: T },
    TypeII { t0: T },
    Consumed,
}

impl<T> PairState<T> {
    fn collapsed_type(&self) -> Option<PairType> {
        match self {
            PairState::TypeI { .. } => Some(PairType::TypeI),
            PairState::TypeII { .. } => Some(PairType::TypeII),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreClockPair<T> {
    pub label: PairLabel,
    pub state: PairState<T>,
}

/// Alice's collapse event: common-frame time and the basis she measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseRecord<T> {
    pub t0: T,
    pub phi_a: BasisPhase<T>,
}

/// Mapping between a party's clock and the common rest-frame time:
/// `local = common + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalClock<T> {
    pub offset: T,
}

impl<T: Real> LocalClock<T> {
    pub fn new(offset: T) -> Self {
        LocalClock { offset }
    }

    pub fn to_common(&self, local: T) -> T {
        local - self.offset
    }

    pub fn to_local(&self, common: T) -> T {
        common + self.offset
    }
}

/// Party-local readout times and the number of pairs consumed at each.
///
/// `period_shift` delays every readout by that many whole periods of the
/// species being read. The recorded series keeps the nominal times, which are
/// phase-equivalent to the actual ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule<T> {
    times: Vec<T>,
    batch_size: usize,
    #[serde(default)]
    period_shift: u64,
}

impl<T: Real> SamplingSchedule<T> {
    pub fn new(times: Vec<T>, batch_size: usize) -> Result<Self, EnsembleError> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(EnsembleError::InvalidSchedule("non-finite time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EnsembleError::InvalidSchedule(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(SamplingSchedule {
            times,
            batch_size,
            period_shift: 0,
        })
    }

    /// `n_points` evenly spaced times on `[start, stop]`.
    pub fn uniform(start: T, stop: T, n_points: usize, batch_size: usize) -> Result<Self, EnsembleError> {
        if n_points == 0 {
            return Err(EnsembleError::InvalidSchedule("no sample points".into()));
        }
        if n_points > 1 && !(stop > start) {
            return Err(EnsembleError::InvalidSchedule("stop must exceed start".into()));
        }
        let times = if n_points == 1 {
            vec![start]
        } else {
            let step = (stop - start) / T::from_usize(n_points - 1).unwrap();
            (0..n_points)
                .map(|k| start + step * T::from_usize(k).unwrap())
                .collect()
        };
        Self::new(times, batch_size)
    }

    pub fn with_period_shift(mut self, periods: u64) -> Self {
        self.period_shift = periods;
        self
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn period_shift(&self) -> u64 {
        self.period_shift
    }

    /// Pairs this schedule consumes.
    pub fn budget(&self) -> usize {
        self.times.len() * self.batch_size
    }

    /// Actual local readout time of point `k` for a species of this period.
    pub fn actual_time(&self, k: usize, period: T) -> T {
        self.times[k] + period * T::from_u64(self.period_shift).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationPoint<T> {
    #[serde(rename = "t_seconds")]
    pub t: T,
    pub count_pos: u64,
    pub count_neg: u64,
    pub batch_size: u64,
}

impl<T: Real> PopulationPoint<T> {
    pub fn frequency(&self) -> T {
        T::from_u64(self.count_pos).unwrap() / T::from_u64(self.batch_size).unwrap()
    }
}

/// Outcome counts per readout time: the raw clock signal.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PopulationSeries<T> {
    pub points: Vec<PopulationPoint<T>>,
}

impl<T: Real + Serialize + for<'de> Deserialize<'de>> PopulationSeries<T> {
    /// CSV with header `t_seconds,count_pos,count_neg,batch_size`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.points.is_empty() {
            wtr.write_record(["t_seconds", "count_pos", "count_neg", "batch_size"])?;
        }
        for p in &self.points {
            wtr.serialize(p)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, csv::Error> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let points = rdr.deserialize().collect::<Result<Vec<_>, _>>()?;
        Ok(PopulationSeries { points })
    }
}

impl<T: Real> PopulationSeries<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.points.iter().map(|p| p.t).collect()
    }
}

/// View over a chosen set of collapsed pairs. Batches are taken in label order.
#[derive(Debug, Clone)]
pub struct SubensembleHandle {
    ensemble_id: u64,
    expected: PairType,
    indices: Vec<usize>,
    cursor: usize,
}

impl SubensembleHandle {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.indices.len() - self.cursor
    }

    /// The type the holder believes these pairs have. Never checked.
    pub fn expected_type(&self) -> PairType {
        self.expected
    }
}

/// Closed-form `P(pos)` for one half of a collapsed pair.
///
/// After Alice's collapse in basis `φ_A`, her qubit is `|pos_{φ_A}>` (Type-I)
/// or `|neg_{φ_A}>` (Type-II) and Bob's is `|neg_{φ_A-η}>` or `|pos_{φ_A-η}>`.
/// Read out after `elapsed` seconds in basis `φ_m`, the pos-type half gives
/// `½(1 + cos(Ω·elapsed + θ - φ_m))` and the neg-type half the complement,
/// with `θ = φ_A` for Alice and `φ_A - η` for Bob.
pub fn pos_probability<T: Real>(
    omega: T,
    elapsed: T,
    pair_type: PairType,
    party: Party,
    phi_a: BasisPhase<T>,
    eta: T,
    phi_m: BasisPhase<T>,
) -> T {
    let theta = match party {
        Party::Alice => phi_a.radians(),
        Party::Bob => phi_a.radians() - eta,
    };
    let arg = ((omega * elapsed).wrap_tau() + theta - phi_m.radians()).wrap_tau();
    let c = arg.cos();
    let pos_type = matches!(
        (party, pair_type),
        (Party::Alice, PairType::TypeI) | (Party::Bob, PairType::TypeII)
    );
    let p = if pos_type {
        T::half() * (T::one() + c)
    } else {
        T::half() * (T::one() - c)
    };
    p.max(T::zero()).min(T::one())
}

#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    id: u64,
    species: ClockSpecies<T>,
    eta: T,
    pairs: Vec<PreClockPair<T>>,
    collapse: Option<CollapseRecord<T>>,
}

impl<T: Real> Ensemble<T> {
    /// `n_pairs` idle pairs in `(|01> - e^{iη}|10>)/√2`, labelled `1..=n_pairs`.
    pub fn new(n_pairs: usize, species: ClockSpecies<T>, eta: T) -> Result<Self, EnsembleError> {
        if n_pairs == 0 {
            return Err(EnsembleError::Empty);
        }
        let pairs = (1..=n_pairs as u64)
            .map(|n| PreClockPair {
                label: PairLabel(n),
                state: PairState::EntangledIdle { eta },
            })
            .collect();
        Ok(Ensemble {
            id: NEXT_ENSEMBLE_ID.fetch_add(1, Ordering::Relaxed),
            species,
            eta,
            pairs,
            collapse: None,
        })
    }

    pub fn species(&self) -> &ClockSpecies<T> {
        &self.species
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[PreClockPair<T>] {
        &self.pairs
    }

    pub fn labels(&self) -> impl Iterator<Item = PairLabel> + '_ {
        self.pairs.iter().map(|p| p.label)
    }

    pub fn collapse_record(&self) -> Option<CollapseRecord<T>> {
        self.collapse
    }

    pub fn consumed(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.state == PairState::Consumed)
            .count()
    }

    fn index_of(&self, label: PairLabel) -> Option<usize> {
        let i = label.0.checked_sub(1)? as usize;
        (i < self.pairs.len()).then_some(i)
    }

    /// Marginal `P(pos)` for `party` measuring an idle pair at common time `t`.
    ///
    /// Evolves the stored pair state by `U(t) ⊗ U(t)`; the result never depends
    /// on `t`.
    pub fn idle_pos_probability(&self, party: Party, phi: BasisPhase<T>, t: T) -> Result<T, EnsembleError> {
        let u = SingleQubitUnitary::evolution(&self.species, t);
        let state = quantum::apply_local(&singlet_state(self.eta), &u, &u)?;
        Ok(dual_probability(&state, party, phi))
    }

    /// Alice measures every pair in basis `phi_a` at common time `t0`, one
    /// uniform draw per pair in label order.
    pub fn alice_collapse_all<R: Rng + ?Sized>(
        &mut self,
        t0: T,
        phi_a: BasisPhase<T>,
        rng: &mut R,
    ) -> Result<(Vec<PairLabel>, Vec<PairLabel>), EnsembleError> {
        if let Some(p) = self
            .pairs
            .iter()
            .find(|p| !matches!(p.state, PairState::EntangledIdle { .. }))
        {
            return Err(EnsembleError::AlreadyCollapsed { label: p.label });
        }
        let state = singlet_state(self.eta);
        let mut type_i = Vec::new();
        let mut type_ii = Vec::new();
        for pair in &mut self.pairs {
            let draw = T::lit(rng.random::<f64>());
            let (outcome, _) = measure_dual(&state, Party::Alice, phi_a, draw)?;
            match outcome {
                DualOutcome::Pos => {
                    pair.state = PairState::TypeI { t0 };
                    type_i.push(pair.label);
                }
                DualOutcome::Neg => {
                    pair.state = PairState::TypeII { t0 };
                    type_ii.push(pair.label);
                }
            }
        }
        self.collapse = Some(CollapseRecord { t0, phi_a });
        Ok((type_i, type_ii))
    }

    /// Handle over exactly `labels`. Only the lifecycle is checked: the holder
    /// cannot verify the collapse type locally.
    pub fn select_subensemble(
        &self,
        labels: &[PairLabel],
        expected: PairType,
    ) -> Result<SubensembleHandle, EnsembleError> {
        let mut indices = Vec::with_capacity(labels.len());
        for &label in labels {
            let i = self
                .index_of(label)
                .ok_or(EnsembleError::UnknownLabel { label })?;
            match self.pairs[i].state {
                PairState::EntangledIdle { .. } => return Err(EnsembleError::IdlePair { label }),
                PairState::Consumed => return Err(EnsembleError::ConsumedPair { label }),
                _ => {}
            }
            indices.push(i);
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(EnsembleError::DuplicateLabel {
                label: self.pairs[w[0]].label,
            });
        }
        Ok(SubensembleHandle {
            ensemble_id: self.id,
            expected,
            indices,
            cursor: 0,
        })
    }

    /// Handle over every collapsed, unconsumed pair, as a party that has not
    /// yet heard which labels are which.
    pub fn select_all_collapsed(&self) -> Result<SubensembleHandle, EnsembleError> {
        let labels: Vec<_> = self
            .pairs
            .iter()
            .filter(|p| p.state.collapsed_type().is_some())
            .map(|p| p.label)
            .collect();
        if labels.is_empty() {
            if let Some(p) = self.pairs.first() {
                if let PairState::EntangledIdle { .. } = p.state {
                    return Err(EnsembleError::IdlePair { label: p.label });
                }
            }
        }
        self.select_subensemble(&labels, PairType::TypeII)
    }

    /// Destructive readout by `party` in basis `phi` at each schedule time.
    ///
    /// Schedule times are `clock` readings; every pair consumed is measured
    /// once with one uniform draw, in label order.
    pub fn sample_population<R: Rng + ?Sized>(
        &mut self,
        handle: &mut SubensembleHandle,
        schedule: &SamplingSchedule<T>,
        party: Party,
        phi: BasisPhase<T>,
        clock: LocalClock<T>,
        rng: &mut R,
    ) -> Result<PopulationSeries<T>, EnsembleError> {
        if handle.ensemble_id != self.id {
            return Err(EnsembleError::ForeignHandle);
        }
        if schedule.budget() > handle.remaining() {
            return Err(EnsembleError::BudgetExhausted {
                needed: schedule.budget(),
                available: handle.remaining(),
            });
        }
        let omega = self.species.omega();
        let eta = self.eta;
        let mut points = Vec::with_capacity(schedule.times.len());
        for &t_local in &schedule.times {
            let t_common = clock.to_common(t_local);
            let mut count_pos = 0u64;
            let batch = &handle.indices[handle.cursor..handle.cursor + schedule.batch_size];
            for &i in batch {
                let pair = &mut self.pairs[i];
                let (pair_type, t0) = match pair.state {
                    PairState::TypeI { t0 } => (PairType::TypeI, t0),
                    PairState::TypeII { t0 } => (PairType::TypeII, t0),
                    PairState::EntangledIdle { .. } => {
                        return Err(EnsembleError::IdlePair { label: pair.label })
                    }
                    PairState::Consumed => {
                        return Err(EnsembleError::ConsumedPair { label: pair.label })
                    }
                };
                let record = self.collapse.expect("collapsed pairs imply a collapse record");
                let p = pos_probability(omega, t_common - t0, pair_type, party, record.phi_a, eta, phi);
                let draw = T::lit(rng.random::<f64>());
                if draw < p {
                    count_pos += 1;
                }
                pair.state = PairState::Consumed;
            }
            handle.cursor += schedule.batch_size;
            let n = schedule.batch_size as u64;
            points.push(PopulationPoint {
                t: t_local,
                count_pos,
                count_neg: n - count_pos,
                batch_size: n,
            });
        }
        Ok(PopulationSeries { points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply_local, dual_basis_states};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn species() -> ClockSpecies<f64> {
        ClockSpecies::new("cs", 2.0).unwrap()
    }

    fn labels(v: &[u64]) -> Vec<PairLabel> {
        v.iter().map(|&n| PairLabel::new(n).unwrap()).collect()
    }

    #[test]
    fn create_labels_and_idle() {
        let e = Ensemble::new(4, species(), 0.0).unwrap();
        assert_eq!(e.labels().collect::<Vec<_>>(), labels(&[1, 2, 3, 4]));
        assert!(e
            .pairs()
            .iter()
            .all(|p| p.state == PairState::EntangledIdle { eta: 0.0 }));
        let one = Ensemble::new(1, species(), PI / 3.0).unwrap();
        assert_eq!(one.pairs()[0].state, PairState::EntangledIdle { eta: PI / 3.0 });
        assert!(matches!(Ensemble::new(0, species(), 0.0), Err(EnsembleError::Empty)));
    }

    #[test]
    fn idle_pairs_carry_no_timing() {
        let e = Ensemble::new(1, species(), 0.4).unwrap();
        for party in [Party::Alice, Party::Bob] {
            let p1 = e.idle_pos_probability(party, BasisPhase::new(0.3), 0.0).unwrap();
            let p2 = e.idle_pos_probability(party, BasisPhase::new(0.3), 17.25).unwrap();
            assert!((p1 - 0.5).abs() < 1e-12 && (p2 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse_partitions_and_is_deterministic() {
        let mut a = Ensemble::new(1000, species(), 0.0).unwrap();
        let mut b = Ensemble::new(1000, species(), 0.0).unwrap();
        let (i1, ii1) = a
            .alice_collapse_all(0.0, BasisPhase::zero(), &mut ChaCha8Rng::seed_from_u64(3))
            .unwrap();
        let (i2, ii2) = b
            .alice_collapse_all(0.0, BasisPhase::zero(), &mut ChaCha8Rng::seed_from_u64(3))
            .unwrap();
        assert_eq!((i1.clone(), ii1.clone()), (i2, ii2));
        let mut all: Vec<_> = i1.iter().chain(ii1.iter()).copied().collect();
        all.sort();
        assert_eq!(all, a.labels().collect::<Vec<_>>());
        assert!(matches!(
            a.alice_collapse_all(0.0, BasisPhase::zero(), &mut ChaCha8Rng::seed_from_u64(3)),
            Err(EnsembleError::AlreadyCollapsed { .. })
        ));
    }

    #[test]
    fn single_pair_collapse() {
        let mut e = Ensemble::new(1, species(), 0.0).unwrap();
        let (i, ii) = e
            .alice_collapse_all(0.0, BasisPhase::zero(), &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        assert_eq!(i.len() + ii.len(), 1);
        assert!(i.is_empty() ^ ii.is_empty());
    }

    #[test]
    fn selection_checks_lifecycle_only() {
        let mut e = Ensemble::new(50, species(), 0.0).unwrap();
        assert!(matches!(
            e.select_subensemble(&labels(&[1]), PairType::TypeII),
            Err(EnsembleError::IdlePair { .. })
        ));
        let (type_i, type_ii) = e
            .alice_collapse_all(0.0, BasisPhase::zero(), &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let h = e.select_subensemble(&type_ii, PairType::TypeII).unwrap();
        assert_eq!(h.len(), type_ii.len());
        // a Type-I label under a Type-II expectation is accepted
        let mixed = e.select_subensemble(&type_i[..1], PairType::TypeII).unwrap();
        assert_eq!(mixed.len(), 1);
        assert!(matches!(
            e.select_subensemble(&labels(&[51]), PairType::TypeI),
            Err(EnsembleError::UnknownLabel { .. })
        ));
        assert!(matches!(
            e.select_subensemble(&labels(&[2, 2]), PairType::TypeI),
            Err(EnsembleError::DuplicateLabel { .. })
        ));
        let mut empty = e.select_subensemble(&[], PairType::TypeI).unwrap();
        assert!(empty.is_empty());
        let sched = SamplingSchedule::new(vec![], 0).unwrap();
        let series = e
            .sample_population(&mut empty, &sched, Party::Bob, BasisPhase::zero(), LocalClock::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(series.is_empty());
    }

    #[test]
    fn consumed_pairs_are_never_resampled() {
        let mut e = Ensemble::new(20, species(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        e.alice_collapse_all(0.0, BasisPhase::zero(), &mut rng).unwrap();
        let all: Vec<_> = e.labels().collect();
        let mut h = e.select_subensemble(&all, PairType::TypeI).unwrap();
        let sched = SamplingSchedule::new(vec![0.0, 1.0], 10).unwrap();
        e.sample_population(&mut h, &sched, Party::Alice, BasisPhase::zero(), LocalClock::default(), &mut rng)
            .unwrap();
        assert_eq!(e.consumed(), 20);
        let sched1 = SamplingSchedule::new(vec![2.0], 1).unwrap();
        assert!(matches!(
            e.sample_population(&mut h, &sched1, Party::Alice, BasisPhase::zero(), LocalClock::default(), &mut rng),
            Err(EnsembleError::BudgetExhausted { needed: 1, available: 0 })
        ));
        assert!(matches!(
            e.select_subensemble(&all[..1], PairType::TypeI),
            Err(EnsembleError::ConsumedPair { .. })
        ));
    }

    #[test]
    fn foreign_handle_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a = Ensemble::new(4, species(), 0.0).unwrap();
        let mut b = Ensemble::new(4, species(), 0.0).unwrap();
        a.alice_collapse_all(0.0, BasisPhase::zero(), &mut rng).unwrap();
        b.alice_collapse_all(0.0, BasisPhase::zero(), &mut rng).unwrap();
        let mut h = a.select_all_collapsed().unwrap();
        let sched = SamplingSchedule::new(vec![0.0], 1).unwrap();
        assert!(matches!(
            b.sample_population(&mut h, &sched, Party::Bob, BasisPhase::zero(), LocalClock::default(), &mut rng),
            Err(EnsembleError::ForeignHandle)
        ));
    }

    #[test]
    fn schedule_validation() {
        assert!(SamplingSchedule::new(vec![0.0, 0.0], 1).is_err());
        assert!(SamplingSchedule::new(vec![1.0, 0.5], 1).is_err());
        assert!(SamplingSchedule::new(vec![f64::NAN], 1).is_err());
        let s = SamplingSchedule::<f64>::uniform(0.0, 1.0, 5, 3).unwrap();
        assert_eq!(s.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.budget(), 15);
        let shifted = s.with_period_shift(2);
        assert!((shifted.actual_time(1, 3.0) - 6.25).abs() < 1e-15);
    }

    /// State-vector oracle for one pair: collapse by Alice, free evolution of
    /// both halves, readout by `party`.
    fn oracle(
        omega: f64,
        elapsed: f64,
        pair_type: PairType,
        party: Party,
        phi_a: f64,
        eta: f64,
        phi_m: f64,
    ) -> f64 {
        let species = ClockSpecies::new("o", omega).unwrap();
        let draw = match pair_type {
            PairType::TypeI => 0.0,
            PairType::TypeII => 0.999_999,
        };
        let (_, post) = measure_dual(&singlet_state(eta), Party::Alice, BasisPhase::new(phi_a), draw).unwrap();
        let u = SingleQubitUnitary::evolution(&species, elapsed);
        let evolved = apply_local(&post, &u, &u).unwrap();
        dual_probability(&evolved, party, BasisPhase::new(phi_m))
    }

    #[test]
    fn closed_form_matches_state_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..2000 {
            let omega = 0.1 + 10.0 * rng.random::<f64>();
            let elapsed = 20.0 * rng.random::<f64>() - 5.0;
            let phi_a = 7.0 * rng.random::<f64>();
            let phi_m = 7.0 * rng.random::<f64>();
            let eta = 7.0 * rng.random::<f64>();
            for pair_type in [PairType::TypeI, PairType::TypeII] {
                for party in [Party::Alice, Party::Bob] {
                    let closed = pos_probability(omega, elapsed, pair_type, party, BasisPhase::new(phi_a), eta, BasisPhase::new(phi_m));
                    let exact = oracle(omega, elapsed, pair_type, party, phi_a, eta, phi_m);
                    assert!((closed - exact).abs() < 1e-12, "{closed} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn bob_type_ii_offset_sign() {
        // Bob's fringe is ½(1 + cos(Ωτ + δ)) with δ = φ_A - φ_B
        let (phi_a, phi_b) = (0.2, 0.9);
        for k in 0..10 {
            let tau = 0.4 * k as f64;
            let p = oracle(2.0, tau, PairType::TypeII, Party::Bob, phi_a, 0.0, phi_b);
            assert!((p - 0.5 * (1.0 + (2.0 * tau + phi_a - phi_b).cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn bob_type_ii_starts_in_pos() {
        let (pos, _) = dual_basis_states(BasisPhase::<f64>::zero());
        let (_, post) = measure_dual(&singlet_state(0.0f64), Party::Alice, BasisPhase::zero(), 0.9).unwrap();
        assert!((dual_probability(&post, Party::Bob, BasisPhase::zero()) - 1.0).abs() < 1e-12);
        assert!((pos.norm_sqr() - 1.0).abs() < 1e-12);

        let mut e = Ensemble::new(2000, species(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (_, type_ii) = e.alice_collapse_all(0.0, BasisPhase::zero(), &mut rng).unwrap();
        let mut h = e.select_subensemble(&type_ii, PairType::TypeII).unwrap();
        let sched = SamplingSchedule::new(vec![0.0], type_ii.len()).unwrap();
        let s = e
            .sample_population(&mut h, &sched, Party::Bob, BasisPhase::zero(), LocalClock::default(), &mut rng)
            .unwrap();
        assert_eq!(s.points[0].count_pos, type_ii.len() as u64);
    }

    #[test]
    fn alice_type_i_half_period_is_dark() {
        let mut e = Ensemble::new(500, species(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (type_i, _) = e.alice_collapse_all(0.0, BasisPhase::zero(), &mut rng).unwrap();
        let mut h = e.select_subensemble(&type_i, PairType::TypeI).unwrap();
        let sched = SamplingSchedule::new(vec![PI / 2.0], type_i.len()).unwrap();
        let s = e
            .sample_population(&mut h, &sched, Party::Alice, BasisPhase::zero(), LocalClock::default(), &mut rng)
            .unwrap();
        assert_eq!(s.points[0].count_pos, 0);
    }

    #[test]
    fn period_shift_readout_matches_nominal() {
        let run = |shift: u64| {
            let mut e = Ensemble::new(400, species(), 0.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let (_, ii) = e.alice_collapse_all(0.0, BasisPhase::zero(), &mut rng).unwrap();
            let mut h = e.select_subensemble(&ii, PairType::TypeII).unwrap();
            let sched = SamplingSchedule::uniform(0.0, 3.0, 4, 20).unwrap().with_period_shift(shift);
            e.sample_population(&mut h, &sched, Party::Bob, BasisPhase::new(0.5), LocalClock::new(0.1), &mut rng)
                .unwrap()
        };
        assert_eq!(run(0), run(1_000_000));
    }

    #[test]
    fn csv_round_trip() {
        let series = PopulationSeries {
            points: vec![
                PopulationPoint { t: 0.0, count_pos: 7, count_neg: 3, batch_size: 10 },
                PopulationPoint { t: 0.125, count_pos: 1, count_neg: 9, batch_size: 10 },
            ],
        };
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_seconds,count_pos,count_neg,batch_size\n"));
        assert_eq!(PopulationSeries::<f64>::read_csv(&buf[..]).unwrap(), series);
    }
}
