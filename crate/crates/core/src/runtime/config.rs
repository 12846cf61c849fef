use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SynthConfig;
use crate::error::{Error, Result};
use crate::latent_map::DEFAULT_K;
use crate::metrics::MetricsConfig;
use crate::onset::OnsetConfig;
use crate::osc::DEFAULT_OUT_PORT;
use crate::vae::TrainConfig;

/// A TOML preset. Every section is optional and command-line flags take
/// precedence over it.
///
/// ```toml
/// [synth]
/// duration_s = 600.0
/// seed = 3
///
/// [train]
/// epochs = 30
/// seed = 7
///
/// [latent]
/// k = 2.0
///
/// [run]
/// checkpoint = "model.lmva"
/// replay = "session.lmc"
/// osc_out = "127.0.0.1:9000"
///
/// [run.onset]
/// hysteresis = 0.05
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub metrics: MetricsConfig,
    pub latent: LatentSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentSection {
    /// Half-width of the normalization window in standard deviations.
    pub k: f64,
}

impl Default for LatentSection {
    fn default() -> Self {
        Self { k: DEFAULT_K }
    }
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Unvalidated `[run]` section; see [`RuntimeConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub checkpoint: Option<PathBuf>,
    /// Corpus file to replay.
    pub replay: Option<PathBuf>,
    /// UDP port for inbound `/sonified/pose` messages.
    pub osc_in: Option<u16>,
    pub osc_out: String,
    /// Replay pacing and underrun detection; defaults to the corpus rate, or
    /// 30 Hz for OSC input.
    pub frame_rate_hz: Option<f64>,
    pub queue_capacity: usize,
    pub latency_log: Option<PathBuf>,
    /// Overrides the normalization window stored in the checkpoint.
    pub k: Option<f64>,
    pub onset: OnsetConfig,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            checkpoint: None,
            replay: None,
            osc_in: None,
            osc_out: format!("127.0.0.1:{DEFAULT_OUT_PORT}"),
            frame_rate_hz: None,
            queue_capacity: 4,
            latency_log: None,
            k: None,
            onset: OnsetConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Replay(PathBuf),
    Osc { port: u16 },
}

/// Validated settings for the live loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub checkpoint: PathBuf,
    pub input: InputSource,
    pub osc_out: String,
    pub frame_rate_hz: Option<f64>,
    pub queue_capacity: usize,
    pub latency_log: Option<PathBuf>,
    pub k: Option<f64>,
    pub onset: OnsetConfig,
}

impl RuntimeConfig {
    pub fn new(checkpoint: impl Into<PathBuf>, input: InputSource) -> Self {
        let d = RunSection::default();
        Self {
            checkpoint: checkpoint.into(),
            input,
            osc_out: d.osc_out,
            frame_rate_hz: d.frame_rate_hz,
            queue_capacity: d.queue_capacity,
            latency_log: d.latency_log,
            k: d.k,
            onset: d.onset,
        }
    }

    /// Requires exactly one input source and existing input files.
    pub fn from_section(section: &RunSection) -> Result<Self> {
        let input = match (&section.replay, section.osc_in) {
            (Some(path), None) => InputSource::Replay(path.clone()),
            (None, Some(port)) => InputSource::Osc { port },
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "choose one input source: a replay file or an OSC input port".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "no input source: give a replay file or an OSC input port".into(),
                ))
            }
        };
        let checkpoint = section
            .checkpoint
            .clone()
            .ok_or_else(|| Error::InvalidConfig("no checkpoint given".into()))?;
        let config = Self {
            checkpoint,
            input,
            osc_out: section.osc_out.clone(),
            frame_rate_hz: section.frame_rate_hz,
            queue_capacity: section.queue_capacity,
            latency_log: section.latency_log.clone(),
            k: section.k,
            onset: section.onset.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.checkpoint.is_file() {
            return Err(Error::io(
                &self.checkpoint,
                std::io::Error::new(std::io::ErrorKind::NotFound, "checkpoint not found"),
            ));
        }
        if let InputSource::Replay(path) = &self.input {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "replay corpus not found"),
                ));
            }
        }
        if let Some(rate) = self.frame_rate_hz {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "frame rate must be positive, got {rate}"
                )));
            }
        }
        if self.queue_capacity == 0 {
            return Err(Error::InvalidConfig("queue capacity must be ≥ 1".into()));
        }
        if let Some(k) = self.k {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::InvalidConfig(format!("k must be positive, got {k}")));
            }
        }
        self.onset.validate()
    }
}
