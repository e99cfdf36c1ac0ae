//! Runs a validated scenario and writes its artifacts.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use qcs_core::baseline::{einstein_sync, MediumModel, SPEED_OF_LIGHT};
use qcs_core::channel::ChannelModel;
use qcs_core::ensemble::{Ensemble, SamplingSchedule};
use qcs_core::protocol::{
    establish_time_origin, run_single_frequency, run_two_frequency, score, PartyConfig, ProtocolError, RunOutput,
    Schedules, Seeds, SyncOutcome, SyncResult, TimeOriginConfig,
};
use qcs_core::quantum::{ClockSpecies, Party};
use qcs_core::rng::{derive_seed, stream};
use qcs_core::stats::rms;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, ScenarioConfig, SeedsConfig};
use crate::validate::{has_errors, validate_config, Diagnostic};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The protocol ran but produced no usable sync (lost labels, too little
    /// data, envelope peak outside the window).
    NotSynced,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NotSynced => 3,
        }
    }
}

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone, Serialize)]
struct Header {
    record: &'static str,
    tool: &'static str,
    version: &'static str,
    mode: Mode,
    seeds: SeedsConfig,
    delta: Option<f64>,
}

impl Header {
    fn new(cfg: &ScenarioConfig) -> Self {
        Header {
            record: "header",
            tool: "qcs",
            version: VERSION,
            mode: cfg.mode,
            seeds: cfg.seeds,
            delta: cfg.resolved_delta(),
        }
    }

    fn comment(&self) -> String {
        format!(
            "# qcs {} mode={} quantum_seed={} channel_seed={}\n",
            self.version,
            serde_json::to_value(self.mode).unwrap().as_str().unwrap(),
            self.seeds.quantum,
            self.seeds.channel
        )
    }
}

#[derive(Serialize)]
struct ResultRecord<'a, R: Serialize> {
    header: &'a Header,
    result: R,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Validates `cfg`, runs it and writes everything under `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<Status, RunError> {
    let diags = validate_config(cfg);
    if has_errors(&diags) {
        return Err(RunError::Invalid(diags));
    }
    let cfg = cfg.resolved();
    let header = Header::new(&cfg);
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), header.comment() + &cfg.to_toml())?;

    if cfg.mode == Mode::BaselineSweep {
        return run_sweep(&cfg, &header, out);
    }
    let run = run_protocol(&cfg, None)?;

    let mut events = BufWriter::new(File::create(out.join("events.jsonl"))?);
    serde_json::to_writer(&mut events, &header)?;
    events.write_all(b"\n")?;
    run.transcript.write_jsonl(&mut events)?;
    events.flush()?;

    for (party, all) in [("alice", &run.alice_series), ("bob", &run.bob_series)] {
        for (name, series) in all {
            let mut w = BufWriter::new(File::create(out.join(format!("series_{party}_{name}.csv")))?);
            w.write_all(header.comment().as_bytes())?;
            series.write_csv(&mut w)?;
            w.flush()?;
        }
    }

    write_json(&out.join("result.json"), &ResultRecord { header: &header, result: &run.result })?;
    Ok(match run.result.outcome {
        SyncOutcome::Synced => Status::Success,
        SyncOutcome::NoSync | SyncOutcome::Inconclusive => Status::NotSynced,
    })
}

fn species_of(cfg: &ScenarioConfig) -> Vec<ClockSpecies<f64>> {
    cfg.species
        .iter()
        .map(|s| ClockSpecies::new(s.name.clone(), s.omega).expect("validated"))
        .collect()
}

/// One protocol run of `cfg`, scored against its configured clock offsets.
/// `override_run` swaps in other seeds and channel (used by sweeps).
pub fn run_protocol(cfg: &ScenarioConfig, override_run: Option<(Seeds, ChannelModel)>) -> Result<RunOutput, RunError> {
    let (seeds, channel) = override_run.unwrap_or((
        Seeds {
            quantum: cfg.seeds.quantum,
            channel: cfg.seeds.channel,
        },
        cfg.channel,
    ));
    let species = species_of(cfg);
    let refs: Vec<&ClockSpecies<f64>> = species.iter().collect();
    let delta = cfg.resolved_delta().expect("validated");
    let alice = PartyConfig::locked(Party::Alice, &refs, cfg.phases.alice, cfg.clocks.alice_offset);
    let bob = PartyConfig::locked(Party::Bob, &refs, cfg.phases.alice - delta, cfg.clocks.bob_offset);
    let s = &cfg.schedule;
    let schedule = Schedules::same(SamplingSchedule::uniform(s.start, s.stop, s.n_points, s.batch_size).map_err(ProtocolError::from)?);
    let mut ensembles = species
        .iter()
        .map(|sp| Ensemble::new(cfg.n_pairs, sp.clone(), cfg.eta))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ProtocolError::from)?;

    let mut out = match cfg.mode {
        Mode::SingleFrequency | Mode::BaselineSweep => {
            run_single_frequency(&mut ensembles[0], &alice, &bob, &channel, &schedule, seeds)?
        }
        Mode::TwoFrequency | Mode::TimeOrigin => {
            let [e1, e2] = &mut ensembles[..] else { unreachable!("validated to two species") };
            let both = [schedule.clone(), schedule];
            if cfg.mode == Mode::TwoFrequency {
                run_two_frequency([e1, e2], &alice, &bob, &channel, &both, seeds)?
            } else {
                let t = cfg.time_origin.as_ref().expect("validated");
                let (w1, w2) = (species[0].omega(), species[1].omega());
                let to = TimeOriginConfig::new(w1, w2 - w1, t.protocol_duration)?;
                establish_time_origin(&to, [e1, e2], &alice, &bob, &channel, &both, seeds)?
            }
        }
    };
    score(&mut out.result, &alice, &bob);
    Ok(out)
}

/// One row of the baseline comparison.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepCell {
    pub sigma: f64,
    pub distance: f64,
    pub rms_error_es: f64,
    pub rms_error_qcs: f64,
    pub n_trials: usize,
}

/// Per-cell detail kept in the result record.
#[derive(Debug, Clone, Serialize)]
struct CellDetail {
    cell: usize,
    synced_qcs: usize,
    qcs_errors: Vec<f64>,
}

/// Medium for a sweep cell, and the label channel it implies: delay is the
/// mean transit time, jitter the transit spread from the index fluctuation.
fn cell_setup(base: &MediumModel, loss: f64, sigma: f64, distance: f64) -> (MediumModel, ChannelModel) {
    let medium = MediumModel {
        distance,
        index_fluctuation_sigma: sigma,
        ..*base
    };
    let channel = ChannelModel {
        base_delay: distance * base.mean_index / SPEED_OF_LIGHT,
        jitter_sigma: distance * sigma / SPEED_OF_LIGHT,
        loss_probability: loss,
    };
    (medium, channel)
}

fn run_cell(cfg: &ScenarioConfig, index: usize, sigma: f64, distance: f64) -> Result<(SweepCell, CellDetail), RunError> {
    let sweep = cfg.sweep.as_ref().expect("validated");
    let (medium, channel) = cell_setup(cfg.medium.as_ref().expect("validated"), cfg.channel.loss_probability, sigma, distance);
    let true_offset = cfg.clocks.bob_offset - cfg.clocks.alice_offset;

    // Every cell replays the same medium draws, so cells differ only by sigma and distance.
    let mut es_rng = stream(cfg.seeds.channel, 1);
    let es: Vec<f64> = (0..sweep.n_trials)
        .map(|_| einstein_sync(&medium, true_offset, &mut es_rng).error)
        .collect();

    let mut qcs = Vec::with_capacity(sweep.n_trials);
    for t in 0..sweep.n_trials {
        let seeds = Seeds {
            quantum: derive_seed(cfg.seeds.quantum, (index * sweep.n_trials + t) as u64),
            channel: cfg.seeds.channel,
        };
        let run = run_protocol(cfg, Some((seeds, channel)))?;
        if let Some(e) = run.result.sync_error {
            qcs.push(e);
        }
    }
    let cell = SweepCell {
        sigma,
        distance,
        rms_error_es: rms(&es),
        rms_error_qcs: if qcs.is_empty() { f64::NAN } else { rms(&qcs) },
        n_trials: sweep.n_trials,
    };
    Ok((
        cell,
        CellDetail {
            cell: index,
            synced_qcs: qcs.len(),
            qcs_errors: qcs,
        },
    ))
}

/// Sweep cells in row-major order over (sigma, distance).
pub fn sweep_cells(cfg: &ScenarioConfig) -> Vec<(f64, f64)> {
    let sweep = cfg.sweep.as_ref().expect("validated");
    sweep
        .sigmas
        .iter()
        .flat_map(|&s| sweep.distances.iter().map(move |&d| (s, d)))
        .collect()
}

fn run_sweep(cfg: &ScenarioConfig, header: &Header, out: &Path) -> Result<Status, RunError> {
    let cells = sweep_cells(cfg);
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(s, d))| run_cell(cfg, i, s, d))
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = BufWriter::new(File::create(out.join("baseline.csv"))?);
    w.write_all(header.comment().as_bytes())?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        for (cell, _) in &rows {
            csv.serialize(cell)?;
        }
        csv.flush()?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct SweepRecord<'a> {
        cells: Vec<&'a SweepCell>,
        details: Vec<&'a CellDetail>,
    }
    let record = SweepRecord {
        cells: rows.iter().map(|(c, _)| c).collect(),
        details: rows.iter().map(|(_, d)| d).collect(),
    };
    write_json(&out.join("result.json"), &ResultRecord { header, result: record })?;

    let all_synced = rows.iter().all(|(c, d)| d.synced_qcs == c.n_trials);
    Ok(if all_synced { Status::Success } else { Status::NotSynced })
}

/// Loads a result record back (for tests and downstream tools).
pub fn read_sync_result(path: &Path) -> Result<SyncResult, RunError> {
    let v: serde_json::Value = serde_json::from_reader(File::open(path)?)?;
    Ok(serde_json::from_value(v["result"].clone())?)
}
