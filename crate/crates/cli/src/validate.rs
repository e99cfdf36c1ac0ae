//! Load-time checks. Errors block a run; warnings do not.

use std::f64::consts::{FRAC_PI_2, PI};

use qcs_core::protocol::TimeOriginConfig;
use serde::{Deserialize, Serialize};

use crate::config::{DeltaSpec, Mode, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub constraint: String,
    pub observed: String,
    pub severity: Severity,
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, severity: Severity, field: &str, constraint: &str, observed: impl ToString) {
        self.0.push(Diagnostic {
            field: field.to_string(),
            constraint: constraint.to_string(),
            observed: observed.to_string(),
            severity,
        });
    }

    fn error(&mut self, field: &str, constraint: &str, observed: impl ToString) {
        self.push(Severity::Error, field, constraint, observed);
    }

    fn warn(&mut self, field: &str, constraint: &str, observed: impl ToString) {
        self.push(Severity::Warning, field, constraint, observed);
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Largest schedule budget accepted for `n_pairs`: the expected sub-ensemble
/// size `N/2` less five binomial standard deviations `5·√N/2`.
pub fn budget_limit(n_pairs: usize) -> f64 {
    let n = n_pairs as f64;
    n / 2.0 - 5.0 * n.sqrt() / 2.0
}

pub fn validate_config(c: &ScenarioConfig) -> Vec<Diagnostic> {
    let mut d = Collector(Vec::new());

    let wanted = match c.mode {
        Mode::SingleFrequency | Mode::BaselineSweep => 1,
        Mode::TwoFrequency | Mode::TimeOrigin => 2,
    };
    if c.species.len() != wanted {
        d.error("species", &format!("exactly {wanted} species for this mode"), c.species.len());
    }
    for (i, s) in c.species.iter().enumerate() {
        if !(s.omega.is_finite() && s.omega > 0.0) {
            d.error(&format!("species[{i}].omega"), "omega > 0", s.omega);
        }
        if s.name.is_empty() {
            d.error(&format!("species[{i}].name"), "non-empty name", "\"\"");
        }
    }
    if c.species.len() == 2 {
        if c.species[0].name == c.species[1].name {
            d.error("species", "distinct names", &c.species[0].name);
        }
        if c.species[0].omega == c.species[1].omega {
            d.error("species", "distinct omegas", c.species[0].omega);
        }
    }

    if c.n_pairs == 0 {
        d.error("n_pairs", "n_pairs >= 1", c.n_pairs);
    }
    if !c.eta.is_finite() {
        d.error("eta", "finite", c.eta);
    }
    if !c.phases.alice.is_finite() {
        d.error("phases.alice", "finite", c.phases.alice);
    }
    match c.phases.delta {
        DeltaSpec::Fixed(x) if !x.is_finite() => d.error("phases.delta", "finite", x),
        DeltaSpec::Random(_) if c.phases.delta_seed.is_none() => {
            d.error("phases.delta_seed", "required when delta = \"random\"", "missing")
        }
        _ => {}
    }
    for (field, v) in [("clocks.alice_offset", c.clocks.alice_offset), ("clocks.bob_offset", c.clocks.bob_offset)] {
        if !v.is_finite() {
            d.error(field, "finite", v);
        }
    }

    let s = &c.schedule;
    let min_points = if wanted == 2 { 5 } else { 3 };
    if s.n_points < min_points {
        d.error("schedule.n_points", &format!("n_points >= {min_points}"), s.n_points);
    }
    if !(s.start.is_finite() && s.stop.is_finite()) || s.stop <= s.start {
        d.error("schedule.stop", "stop > start", format!("start {} stop {}", s.start, s.stop));
    }
    if s.batch_size == 0 {
        d.error("schedule.batch_size", "batch_size >= 1", 0);
    }
    let budget = s.n_points.saturating_mul(s.batch_size);
    let limit = budget_limit(c.n_pairs);
    if budget as f64 > limit {
        d.error(
            "schedule",
            &format!("n_points * batch_size <= N/2 - 5*sqrt(N)/2 = {limit:.1}"),
            budget,
        );
    }

    if let Err(e) = c.channel.validate() {
        d.error("channel", "valid channel model", e);
    } else if c.channel.loss_probability == 1.0 {
        d.warn("channel.loss_probability", "< 1 (labels are sent once; the run will always abort)", 1.0);
    }

    if wanted == 2 && c.species.len() == 2 && s.n_points > 1 {
        let spacing = (s.stop - s.start) / (s.n_points - 1) as f64;
        let limit = PI / (c.species[0].omega + c.species[1].omega);
        if spacing >= limit {
            d.error(
                "schedule.n_points",
                &format!("grid spacing < pi/(omega1 + omega2) = {limit}"),
                spacing,
            );
        }
    }

    if c.mode == Mode::TimeOrigin {
        match &c.time_origin {
            None => d.error("time_origin.protocol_duration", "required in time_origin mode", "missing"),
            Some(t) if c.species.len() == 2 => {
                let (w1, w2) = (c.species[0].omega, c.species[1].omega);
                let dw = w2 - w1;
                if !(dw > 0.0) {
                    d.error("species", "omega of the second species > omega of the first", dw);
                } else if TimeOriginConfig::new(w1, dw, t.protocol_duration).is_err() {
                    d.error(
                        "time_origin.protocol_duration",
                        &format!("delta_omega * protocol_duration < pi/2 = {FRAC_PI_2}"),
                        dw * t.protocol_duration,
                    );
                } else {
                    let peak = PI / dw;
                    if peak < s.start || peak > s.stop {
                        d.warn(
                            "schedule",
                            &format!("window should contain the envelope peak at pi/delta_omega = {peak}"),
                            format!("[{}, {}]", s.start, s.stop),
                        );
                    }
                }
            }
            Some(_) => {}
        }
    }

    if c.mode == Mode::BaselineSweep {
        match &c.medium {
            None => d.error("medium", "required in baseline_sweep mode", "missing"),
            Some(m) => {
                if let Err(e) = m.validate() {
                    d.error("medium", "valid medium model", e);
                }
            }
        }
        match &c.sweep {
            None => d.error("sweep", "required in baseline_sweep mode", "missing"),
            Some(sw) => {
                if sw.sigmas.is_empty() || sw.sigmas.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    d.error("sweep.sigmas", "non-empty, each >= 0", format!("{:?}", sw.sigmas));
                }
                if sw.distances.is_empty() || sw.distances.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    d.error("sweep.distances", "non-empty, each > 0", format!("{:?}", sw.distances));
                }
                if sw.n_trials < 2 {
                    d.error("sweep.n_trials", "n_trials >= 2", sw.n_trials);
                }
            }
        }
    }

    d.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn base(mode: &str, species: &str, extra: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml(&format!(
            "mode = \"{mode}\"\nn_pairs = 1000000\n{species}\n[schedule]\nstart = 0.5\nstop = 20.0\nn_points = 40\nbatch_size = 10000\n{extra}"
        ))
        .unwrap()
    }

    const ONE: &str = "[[species]]\nname = \"a\"\nomega = 1.0\n";
    const TWO: &str = "[[species]]\nname = \"a\"\nomega = 1.0\n[[species]]\nname = \"b\"\nomega = 1.2\n";

    #[test]
    fn clean_config_has_no_diagnostics() {
        assert!(validate_config(&base("single_frequency", ONE, "")).is_empty());
        let c = base("time_origin", TWO, "[time_origin]\nprotocol_duration = 7.0\n");
        assert!(validate_config(&c).is_empty(), "{:?}", validate_config(&c));
    }

    #[test]
    fn nonpositive_omega() {
        let c = base("single_frequency", "[[species]]\nname = \"a\"\nomega = 0.0\n", "");
        let diags = validate_config(&c);
        assert!(diags.iter().any(|d| d.field == "species[0].omega" && d.severity == Severity::Error));
    }

    #[test]
    fn budget_margin() {
        let mut c = base("single_frequency", ONE, "");
        // 1e6 pairs: limit 500000 - 2500 = 497500
        c.schedule.n_points = 50;
        c.schedule.batch_size = 9950;
        assert!(validate_config(&c).is_empty());
        c.schedule.batch_size = 9951;
        let diags = validate_config(&c);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "schedule");
        assert_eq!(diags[0].observed, "497550");
    }

    #[test]
    fn certain_loss_warns() {
        let c = base("single_frequency", ONE, "[channel]\nbase_delay = 1.0\njitter_sigma = 0.0\nloss_probability = 1.0\n");
        let diags = validate_config(&c);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert!(!has_errors(&diags));
    }

    #[test]
    fn time_origin_bound() {
        let c = base("time_origin", TWO, "[time_origin]\nprotocol_duration = 8.0\n");
        // 0.2 * 8.0 = 1.6 > pi/2
        let diags = validate_config(&c);
        assert!(diags.iter().any(|d| {
            d.field == "time_origin.protocol_duration" && (d.observed.parse::<f64>().unwrap() - 1.6).abs() < 1e-12
        }));
        let c = base("time_origin", TWO, "");
        assert!(has_errors(&validate_config(&c)));
    }

    #[test]
    fn coarse_grid_for_beats() {
        let mut c = base("two_frequency", TWO, "");
        c.schedule.n_points = 10;
        assert!(validate_config(&c).iter().any(|d| d.field == "schedule.n_points"));
    }

    #[test]
    fn sweep_needs_medium_and_grid() {
        let c = base("baseline_sweep", ONE, "");
        let fields: Vec<_> = validate_config(&c).into_iter().map(|d| d.field).collect();
        assert!(fields.contains(&"medium".to_string()) && fields.contains(&"sweep".to_string()));
    }
}
