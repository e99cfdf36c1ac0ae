use crate::channel::ChannelModel;
use crate::ensemble::{Ensemble, EnsembleError, PairLabel, PairType, PopulationSeries};
use crate::estimation::{
    beat_difference, envelope_fit, estimate_phase, first_envelope_maximum, EnvelopeFit, EstimationError,
};
use crate::quantum::Party;
use crate::rng::stream;
use crate::scalar::Real;

use super::events::{EventQueue, Transcript, TranscriptEvent};
use super::station::Station;
use super::{
    broadcast_labels, ClassicalMessage, OffsetEstimate, PartyConfig, Payload, ProtocolError, RunMode, Schedules,
    Seeds, SpeciesEstimates, SyncOutcome, SyncResult, TimeOriginConfig,
};

// Stream layout under the quantum seed.
const COLLAPSE_STREAM: u64 = 1;
const ALICE_STREAM: u64 = 101;
const BOB_STREAM: u64 = 201;

/// Everything a run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: SyncResult,
    pub transcript: Transcript,
    /// `(species name, series)` in species order.
    pub alice_series: Vec<(String, PopulationSeries<f64>)>,
    pub bob_series: Vec<(String, PopulationSeries<f64>)>,
}

impl RunOutput {
    fn inconclusive(mut self, reason: String) -> Self {
        self.result.outcome = SyncOutcome::Inconclusive;
        self.result.reason = Some(reason);
        self.result.offset = None;
        self
    }
}

enum Event {
    Collapse,
    Batch { party: Party, s: usize, k: usize },
    Deliver { msg: usize },
}

enum Halt {
    NoSync(String),
    Inconclusive(String),
}

struct Execution {
    names: Vec<String>,
    alice: Vec<PopulationSeries<f64>>,
    bob: Vec<PopulationSeries<f64>>,
    transcript: Transcript,
    completion_time: Option<f64>,
    halt: Option<Halt>,
}

/// A sub-ensemble too small for the schedule is a data shortfall, not a bug.
fn budget_halt(e: EnsembleError, party: Party, species: &str) -> Result<Halt, ProtocolError> {
    match e {
        EnsembleError::BudgetExhausted { needed, available } => Ok(Halt::Inconclusive(format!(
            "party {party} needs {needed} pairs of {species} but holds {available}"
        ))),
        other => Err(other.into()),
    }
}

fn execute(
    ensembles: &mut [&mut Ensemble<f64>],
    alice_cfg: &PartyConfig,
    bob_cfg: &PartyConfig,
    channel: &ChannelModel,
    schedules: &[Schedules],
    seeds: Seeds,
) -> Result<Execution, ProtocolError> {
    channel.validate()?;
    if alice_cfg.party != Party::Alice {
        return Err(ProtocolError::WrongRole(alice_cfg.party));
    }
    if bob_cfg.party != Party::Bob {
        return Err(ProtocolError::WrongRole(bob_cfg.party));
    }
    let names: Vec<String> = ensembles.iter().map(|e| e.species().name().to_string()).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let n = ensembles.len();

    let mut alice = Station::new(
        alice_cfg,
        &name_refs,
        schedules.iter().map(|s| s.alice.clone()).collect(),
        (0..n as u64).map(|s| stream(seeds.quantum, ALICE_STREAM + s)).collect(),
    )?;
    let mut bob = Station::new(
        bob_cfg,
        &name_refs,
        schedules.iter().map(|s| s.bob.clone()).collect(),
        (0..n as u64).map(|s| stream(seeds.quantum, BOB_STREAM + s)).collect(),
    )?;
    let mut channel_rng = stream(seeds.channel, 0);

    let mut queue = EventQueue::new();
    let mut transcript = Transcript::default();
    let mut messages: Vec<ClassicalMessage> = Vec::new();
    let mut completion_time = None;
    let mut halt: Option<Halt> = None;

    queue.push(alice.clock.to_common(0.0), Event::Collapse);
    while let Some((time, _, event)) = queue.pop() {
        match event {
            Event::Collapse => {
                let local = alice.clock.to_local(time);
                for s in 0..n {
                    let ensemble = &mut *ensembles[s];
                    let period = ensemble.species().period();
                    let mut rng = stream(seeds.quantum, COLLAPSE_STREAM + s as u64);
                    let (type_i, type_ii) = ensemble.alice_collapse_all(time, alice.lanes[s].phase, &mut rng)?;
                    transcript.push(
                        time,
                        Party::Alice,
                        local,
                        TranscriptEvent::Collapse {
                            species: names[s].clone(),
                            type_i: type_i.len(),
                            type_ii: type_ii.len(),
                        },
                    );
                    let handle = ensemble.select_subensemble(&type_i, PairType::TypeI)?;
                    match alice.begin_sampling(s, handle, local, period) {
                        Ok(times) => {
                            for (k, t) in times.into_iter().enumerate() {
                                queue.push(alice.clock.to_common(t), Event::Batch { party: Party::Alice, s, k });
                            }
                        }
                        Err(e) => {
                            let h = budget_halt(e, Party::Alice, &names[s])?;
                            halt.get_or_insert(h);
                        }
                    }
                    transcript.push(
                        time,
                        Party::Alice,
                        local,
                        TranscriptEvent::Send {
                            species: names[s].clone(),
                            n_labels: type_i.len(),
                        },
                    );
                    match broadcast_labels(channel, Party::Alice, &names[s], type_i, time, &mut channel_rng) {
                        Some(msg) => {
                            queue.push(msg.deliver_time, Event::Deliver { msg: messages.len() });
                            messages.push(msg);
                        }
                        None => {
                            transcript.push(
                                time,
                                Party::Alice,
                                local,
                                TranscriptEvent::Lost {
                                    species: names[s].clone(),
                                },
                            );
                            halt.get_or_insert(Halt::NoSync(format!("label message for {} was lost", names[s])));
                        }
                    }
                }
            }
            Event::Deliver { msg } => {
                let Payload::TypeILabels { species, labels } = &messages[msg].payload;
                let s = names.iter().position(|nm| nm == species).expect("messages name known species");
                let local = bob.clock.to_local(time);
                transcript.push(
                    time,
                    Party::Bob,
                    local,
                    TranscriptEvent::Deliver {
                        species: species.clone(),
                        n_labels: labels.len(),
                        send_time: messages[msg].send_time,
                    },
                );
                let ensemble = &*ensembles[s];
                let complement: Vec<PairLabel> = ensemble
                    .labels()
                    .filter(|l| labels.binary_search(l).is_err())
                    .collect();
                let handle = ensemble.select_subensemble(&complement, PairType::TypeII)?;
                match bob.begin_sampling(s, handle, local, ensemble.species().period()) {
                    Ok(times) => {
                        for (k, t) in times.into_iter().enumerate() {
                            queue.push(bob.clock.to_common(t), Event::Batch { party: Party::Bob, s, k });
                        }
                    }
                    Err(e) => {
                        let h = budget_halt(e, Party::Bob, species)?;
                        halt.get_or_insert(h);
                    }
                }
            }
            Event::Batch { party, s, k } => {
                let station = match party {
                    Party::Alice => &mut alice,
                    Party::Bob => &mut bob,
                };
                let point = station.sample_batch(s, k, &mut *ensembles[s], party)?;
                transcript.push(
                    time,
                    party,
                    station.clock.to_local(time),
                    TranscriptEvent::SampleBatch {
                        species: names[s].clone(),
                        nominal_t: point.t,
                        count_pos: point.count_pos,
                        count_neg: point.count_neg,
                    },
                );
                completion_time = Some(time);
            }
        }
        if let Some(h) = &halt {
            let reason = match h {
                Halt::NoSync(r) | Halt::Inconclusive(r) => r.clone(),
            };
            let last = transcript.records.last().map_or(time, |r| r.time);
            transcript.push(last, Party::Alice, alice.clock.to_local(last), TranscriptEvent::Abort { reason });
            break;
        }
    }

    Ok(Execution {
        names,
        alice: alice.lanes.into_iter().map(|l| l.series).collect(),
        bob: bob.lanes.into_iter().map(|l| l.series).collect(),
        transcript,
        completion_time,
        halt,
    })
}

/// Splits estimation failures into "not enough signal" and real errors.
fn conclude<T>(r: Result<T, EstimationError>) -> Result<Result<T, String>, ProtocolError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_inconclusive() => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn package(exec: Execution, mode: RunMode) -> RunOutput {
    let (outcome, reason) = match &exec.halt {
        None => (SyncOutcome::Synced, None),
        Some(Halt::NoSync(r)) => (SyncOutcome::NoSync, Some(r.clone())),
        Some(Halt::Inconclusive(r)) => (SyncOutcome::Inconclusive, Some(r.clone())),
    };
    let mut result = SyncResult::empty(mode, outcome, reason);
    result.completion_time = exec.completion_time;
    RunOutput {
        result,
        transcript: exec.transcript,
        alice_series: exec.names.iter().cloned().zip(exec.alice).collect(),
        bob_series: exec.names.iter().cloned().zip(exec.bob).collect(),
    }
}

fn phase_estimates(out: &RunOutput, ensembles: &[&mut Ensemble<f64>]) -> Result<Vec<SpeciesEstimates>, ProtocolError> {
    ensembles
        .iter()
        .enumerate()
        .map(|(s, e)| {
            Ok(SpeciesEstimates {
                species: e.species().name().to_string(),
                omega: e.species().omega(),
                alice: estimate_phase(&out.alice_series[s].1, e.species())?,
                bob: estimate_phase(&out.bob_series[s].1, e.species())?,
            })
        })
        .collect()
}

/// Single-frequency protocol on one ensemble.
///
/// Alice collapses every pair at her clock's zero, samples her Type-I half and
/// broadcasts the Type-I labels. Bob, once the labels arrive, samples the
/// complementary (Type-II) half. Each fits its own fringe phase. The offset
/// they infer assumes their basis phases agree; any lock offset shows up as a
/// clock offset of `δ/Ω`.
pub fn run_single_frequency(
    ensemble: &mut Ensemble<f64>,
    alice: &PartyConfig,
    bob: &PartyConfig,
    channel: &ChannelModel,
    schedules: &Schedules,
    seeds: Seeds,
) -> Result<RunOutput, ProtocolError> {
    let mut ensembles = [ensemble];
    let exec = execute(&mut ensembles, alice, bob, channel, std::slice::from_ref(schedules), seeds)?;
    let mut out = package(exec, RunMode::SingleFrequency);
    if out.result.outcome != SyncOutcome::Synced {
        return Ok(out);
    }
    let est = phase_estimates(&out, &ensembles)?;
    let omega = ensembles[0].species().omega();
    let eta = ensembles[0].eta();
    let (a, b) = (est[0].alice, est[0].bob);
    let dphi = (b.phase - a.phase + eta).wrap_pi();
    out.result.offset = Some(OffsetEstimate {
        value: -dphi / omega,
        sigma: a.sigma.hypot(b.sigma) / omega,
        ambiguity: Some(std::f64::consts::TAU / omega),
    });
    out.result.species = est;
    Ok(out)
}

struct TwoFrequency {
    out: RunOutput,
    fits: Option<[EnvelopeFit<f64>; 2]>,
}

fn check_two_species(
    ensembles: &[&mut Ensemble<f64>; 2],
    alice: &PartyConfig,
    bob: &PartyConfig,
    schedules: &[Schedules; 2],
) -> Result<(), ProtocolError> {
    let (s1, s2) = (ensembles[0].species(), ensembles[1].species());
    if s1.omega() == s2.omega() {
        return Err(ProtocolError::SpeciesCollision(s1.omega()));
    }
    if s1.name() == s2.name() {
        return Err(ProtocolError::MismatchedSchedules(format!(
            "both species are named {:?}",
            s1.name()
        )));
    }
    for (who, x, y) in [
        ("alice", &schedules[0].alice, &schedules[1].alice),
        ("bob", &schedules[0].bob, &schedules[1].bob),
    ] {
        if x.times() != y.times() || x.batch_size() != y.batch_size() {
            return Err(ProtocolError::MismatchedSchedules(format!(
                "{who} must sample both species on the same grid"
            )));
        }
    }
    let lock = |p: &PartyConfig| -> Result<(f64, f64), ProtocolError> {
        Ok((p.phase_for(s1.name())?.radians(), p.phase_for(s2.name())?.radians()))
    };
    let (a1, a2) = lock(alice)?;
    let (b1, b2) = lock(bob)?;
    if ((a1 - b1) - (a2 - b2)).wrap_pi().abs() > 1e-12 {
        return Err(ProtocolError::PhaseLockMismatch);
    }
    Ok(())
}

fn two_frequency(
    ensembles: [&mut Ensemble<f64>; 2],
    alice: &PartyConfig,
    bob: &PartyConfig,
    channel: &ChannelModel,
    schedules: &[Schedules; 2],
    seeds: Seeds,
    mode: RunMode,
) -> Result<TwoFrequency, ProtocolError> {
    check_two_species(&ensembles, alice, bob, schedules)?;
    let mut ensembles = ensembles;
    let exec = execute(&mut ensembles, alice, bob, channel, schedules, seeds)?;
    let mut out = package(exec, mode);
    if out.result.outcome != SyncOutcome::Synced {
        return Ok(TwoFrequency { out, fits: None });
    }
    out.result.species = phase_estimates(&out, &ensembles)?;
    let (w1, w2) = (ensembles[0].species().omega(), ensembles[1].species().omega());

    let beats_a = beat_difference(&out.alice_series[0].1, &out.alice_series[1].1)?;
    let beats_b = beat_difference(&out.bob_series[0].1, &out.bob_series[1].1)?;
    let fit_a = match conclude(envelope_fit(&beats_a, w1, w2))? {
        Ok(f) => f,
        Err(reason) => return Ok(TwoFrequency { out: out.inconclusive(format!("alice: {reason}")), fits: None }),
    };
    let fit_b = match conclude(envelope_fit(&beats_b, w1, w2))? {
        Ok(f) => f,
        Err(reason) => return Ok(TwoFrequency { out: out.inconclusive(format!("bob: {reason}")), fits: None }),
    };
    out.result.envelope_phase_a = Some(fit_a.envelope);
    out.result.envelope_phase_b = Some(fit_b.envelope);

    // ψ_B - ψ_A = ½(Ω₂ - Ω₁)·offset, known modulo π
    let half = 0.5 * (w2 - w1);
    let dpsi = (fit_b.envelope.phase - fit_a.envelope.phase).wrap_symmetric(std::f64::consts::PI);
    out.result.offset = Some(OffsetEstimate {
        value: dpsi / half,
        sigma: fit_a.envelope.sigma.hypot(fit_b.envelope.sigma) / half.abs(),
        ambiguity: Some(std::f64::consts::PI / half.abs()),
    });
    Ok(TwoFrequency {
        out,
        fits: Some([fit_a, fit_b]),
    })
}

/// Two-frequency protocol: the single-frequency flow on both species with
/// the same schedules, then each party fits the envelope of the difference of
/// its two fringes. The envelope phase carries no lock offset, so the inferred
/// clock offset is free of `δ` (modulo `2π/|Ω₂-Ω₁|`).
pub fn run_two_frequency(
    ensembles: [&mut Ensemble<f64>; 2],
    alice: &PartyConfig,
    bob: &PartyConfig,
    channel: &ChannelModel,
    schedules: &[Schedules; 2],
    seeds: Seeds,
) -> Result<RunOutput, ProtocolError> {
    two_frequency(ensembles, alice, bob, channel, schedules, seeds, RunMode::TwoFrequency).map(|r| r.out)
}

/// Common time origin from the first envelope maximum after each party's own
/// clock zero. Ensembles must carry `Ω₁` and `Ω₁ + ΔΩ`, in that order.
pub fn establish_time_origin(
    config: &TimeOriginConfig,
    ensembles: [&mut Ensemble<f64>; 2],
    alice: &PartyConfig,
    bob: &PartyConfig,
    channel: &ChannelModel,
    schedules: &[Schedules; 2],
    seeds: Seeds,
) -> Result<RunOutput, ProtocolError> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let (w1, w2) = (ensembles[0].species().omega(), ensembles[1].species().omega());
    if !close(w1, config.omega1()) || !close(w2, config.omega2()) {
        return Err(ProtocolError::TimeOrigin(format!(
            "ensembles carry omegas ({w1}, {w2}), expected ({}, {})",
            config.omega1(),
            config.omega2()
        )));
    }
    let TwoFrequency { mut out, fits } =
        two_frequency(ensembles, alice, bob, channel, schedules, seeds, RunMode::TimeOrigin)?;
    if fits.is_none() {
        return Ok(out);
    }
    let beats_a = beat_difference(&out.alice_series[0].1, &out.alice_series[1].1)?;
    let beats_b = beat_difference(&out.bob_series[0].1, &out.bob_series[1].1)?;
    let ta = match conclude(first_envelope_maximum(&beats_a, w1, w2 - w1))? {
        Ok(t) => t,
        Err(reason) => return Ok(out.inconclusive(format!("alice: {reason}"))),
    };
    let tb = match conclude(first_envelope_maximum(&beats_b, w1, w2 - w1))? {
        Ok(t) => t,
        Err(reason) => return Ok(out.inconclusive(format!("bob: {reason}"))),
    };
    out.result.t_origin_a = Some(ta);
    out.result.t_origin_b = Some(tb);
    out.result.offset = Some(OffsetEstimate {
        value: tb.t - ta.t,
        sigma: ta.sigma.hypot(tb.sigma),
        ambiguity: None,
    });
    Ok(out)
}
