#![allow(dead_code)]

use qcs_core::channel::ChannelModel;
use qcs_core::ensemble::{Ensemble, SamplingSchedule};
use qcs_core::protocol::{
    establish_time_origin, run_single_frequency, run_two_frequency, score, PartyConfig, RunOutput, Schedules,
    Seeds, TimeOriginConfig,
};
use qcs_core::quantum::{ClockSpecies, Party};
use std::f64::consts::TAU;

pub fn species(name: &str, omega: f64) -> ClockSpecies<f64> {
    ClockSpecies::new(name, omega).unwrap()
}

/// `n` readouts evenly covering one period of `omega`, starting at 0.
pub fn one_period(omega: f64, n: usize, batch: usize) -> SamplingSchedule<f64> {
    let times = (0..n).map(|k| k as f64 * TAU / omega / n as f64).collect();
    SamplingSchedule::new(times, batch).unwrap()
}

/// Alice locked at `phi_a`, Bob at `phi_a - delta`, both for every species.
pub fn parties(sp: &[&ClockSpecies<f64>], phi_a: f64, delta: f64, off_a: f64, off_b: f64) -> (PartyConfig, PartyConfig) {
    (
        PartyConfig::locked(Party::Alice, sp, phi_a, off_a),
        PartyConfig::locked(Party::Bob, sp, phi_a - delta, off_b),
    )
}

pub struct Single {
    pub omega: f64,
    pub n_pairs: usize,
    pub eta: f64,
    pub phi_a: f64,
    pub delta: f64,
    pub off_a: f64,
    pub off_b: f64,
    pub schedule: SamplingSchedule<f64>,
    pub channel: ChannelModel,
}

impl Single {
    pub fn new(omega: f64, n_pairs: usize, schedule: SamplingSchedule<f64>) -> Self {
        Single {
            omega,
            n_pairs,
            eta: 0.0,
            phi_a: 0.0,
            delta: 0.0,
            off_a: 0.0,
            off_b: 0.0,
            schedule,
            channel: ChannelModel::default(),
        }
    }

    pub fn run(&self, seeds: Seeds) -> RunOutput {
        let sp = species("cs", self.omega);
        let mut ens = Ensemble::new(self.n_pairs, sp.clone(), self.eta).unwrap();
        let (a, b) = parties(&[&sp], self.phi_a, self.delta, self.off_a, self.off_b);
        let mut out =
            run_single_frequency(&mut ens, &a, &b, &self.channel, &Schedules::same(self.schedule.clone()), seeds)
                .unwrap();
        score(&mut out.result, &a, &b);
        out
    }
}

pub struct Dual {
    pub omega1: f64,
    pub omega2: f64,
    pub n_pairs: usize,
    pub eta: f64,
    pub phi_a: f64,
    pub delta: f64,
    pub off_a: f64,
    pub off_b: f64,
    pub schedule: SamplingSchedule<f64>,
    pub channel: ChannelModel,
}

impl Dual {
    pub fn new(omega1: f64, omega2: f64, n_pairs: usize, schedule: SamplingSchedule<f64>) -> Self {
        Dual {
            omega1,
            omega2,
            n_pairs,
            eta: 0.0,
            phi_a: 0.0,
            delta: 0.0,
            off_a: 0.0,
            off_b: 0.0,
            schedule,
            channel: ChannelModel::default(),
        }
    }

    fn setup(&self) -> (Ensemble<f64>, Ensemble<f64>, PartyConfig, PartyConfig, [Schedules; 2]) {
        let s1 = species("one", self.omega1);
        let s2 = species("two", self.omega2);
        let e1 = Ensemble::new(self.n_pairs, s1.clone(), self.eta).unwrap();
        let e2 = Ensemble::new(self.n_pairs, s2.clone(), self.eta).unwrap();
        let (a, b) = parties(&[&s1, &s2], self.phi_a, self.delta, self.off_a, self.off_b);
        let sched = Schedules::same(self.schedule.clone());
        (e1, e2, a, b, [sched.clone(), sched])
    }

    pub fn run(&self, seeds: Seeds) -> RunOutput {
        let (mut e1, mut e2, a, b, sched) = self.setup();
        let mut out = run_two_frequency([&mut e1, &mut e2], &a, &b, &self.channel, &sched, seeds).unwrap();
        score(&mut out.result, &a, &b);
        out
    }

    pub fn run_time_origin(&self, config: &TimeOriginConfig, seeds: Seeds) -> RunOutput {
        let (mut e1, mut e2, a, b, sched) = self.setup();
        let mut out =
            establish_time_origin(config, [&mut e1, &mut e2], &a, &b, &self.channel, &sched, seeds).unwrap();
        score(&mut out.result, &a, &b);
        out
    }
}

/// Circular distance on `[0, period)`.
pub fn circ(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}
