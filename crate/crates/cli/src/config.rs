//! Scenario file format (TOML).

use std::path::{Path, PathBuf};

use qcs_core::baseline::MediumModel;
use qcs_core::channel::ChannelModel;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SingleFrequency,
    TwoFrequency,
    TimeOrigin,
    BaselineSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesConfig {
    pub name: String,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKeyword {
    Random,
}

/// Either a fixed lock offset in radians or `"random"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Fixed(f64),
    Random(RandomKeyword),
}

impl Default for DeltaSpec {
    fn default() -> Self {
        DeltaSpec::Fixed(0.0)
    }
}

/// Basis phases: Alice at `alice`, Bob at `alice - delta`, for every species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesConfig {
    #[serde(default)]
    pub alice: f64,
    #[serde(default)]
    pub delta: DeltaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_seed: Option<u64>,
}

impl Default for PhasesConfig {
    fn default() -> Self {
        PhasesConfig {
            alice: 0.0,
            delta: DeltaSpec::default(),
            delta_seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClocksConfig {
    #[serde(default)]
    pub alice_offset: f64,
    #[serde(default)]
    pub bob_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    #[serde(default)]
    pub quantum: u64,
    #[serde(default)]
    pub channel: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeOriginSection {
    pub protocol_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    pub distances: Vec<f64>,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub n_pairs: usize,
    #[serde(default)]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub species: Vec<SpeciesConfig>,
    #[serde(default)]
    pub phases: PhasesConfig,
    #[serde(default)]
    pub clocks: ClocksConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub seeds: SeedsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_origin: Option<TimeOriginSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|source| LoadError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// The lock offset this scenario runs with. A random offset is drawn once
    /// from `delta_seed`, independent of the quantum and channel seeds.
    pub fn resolved_delta(&self) -> Option<f64> {
        match self.phases.delta {
            DeltaSpec::Fixed(d) => Some(d),
            DeltaSpec::Random(_) => self
                .phases
                .delta_seed
                .map(|seed| qcs_core::rng::stream(seed, 0).random::<f64>() * std::f64::consts::TAU),
        }
    }

    /// Copy with every random choice pinned, as echoed next to the outputs.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if let Some(d) = self.resolved_delta() {
            c.phases.delta = DeltaSpec::Fixed(d);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
mode = "single_frequency"
n_pairs = 1000

[[species]]
name = "cs"
omega = 1.0

[schedule]
start = 0.0
stop = 5.0
n_points = 10
batch_size = 20
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.phases.delta, DeltaSpec::Fixed(0.0));
        assert_eq!(c.channel, ChannelModel::default());
        assert_eq!(c.seeds, SeedsConfig::default());
    }

    #[test]
    fn random_delta_is_pinned_by_its_seed() {
        let text = format!("{MINIMAL}\n[phases]\ndelta = \"random\"\ndelta_seed = 9\n");
        let c = ScenarioConfig::from_toml(&text).unwrap();
        let d = c.resolved_delta().unwrap();
        assert!((0.0..std::f64::consts::TAU).contains(&d));
        assert_eq!(c.resolved_delta(), Some(d));
        let mut other = c.clone();
        other.phases.delta_seed = Some(10);
        assert_ne!(other.resolved_delta(), Some(d));
        assert_eq!(c.resolved().phases.delta, DeltaSpec::Fixed(d));
    }

    #[test]
    fn echo_reloads_to_the_same_config() {
        let text = format!("{MINIMAL}\n[phases]\ndelta = \"random\"\ndelta_seed = 3\n");
        let c = ScenarioConfig::from_toml(&text).unwrap().resolved();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{MINIMAL}\n[phases]\ndelt = 1.0\n");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }
}
