//! Session and experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vibroguide_core::feedback::{FeedbackConfig, ModalityKind};
use vibroguide_core::loading::PlateNoise;
use vibroguide_core::metrics::MetricsConfig;
use vibroguide_core::wearer::{AgentParams, AgentPreset};
use vibroguide_core::{Error, HumanModel64, Result};

use crate::protocol::ProtocolSpec;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Who closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentChoice {
    Preset(AgentPreset),
    Live,
}

impl std::str::FromStr for AgentChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "live" {
            Ok(AgentChoice::Live)
        } else {
            s.parse().map(AgentChoice::Preset)
        }
    }
}

impl std::fmt::Display for AgentChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentChoice::Live => f.write_str("live"),
            AgentChoice::Preset(p) => {
                let s = serde_json::to_value(p).map_err(|_| std::fmt::Error)?;
                f.write_str(s.as_str().unwrap_or("?"))
            }
        }
    }
}

impl Serialize for AgentChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Model definition file; the built-in 70 kg / 1.76 m model when absent.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default = "default_modality")]
    pub modality: ModalityKind,
    #[serde(default = "default_agent")]
    pub agent: AgentChoice,
    /// Replaces the preset's parameters when given.
    #[serde(default)]
    pub agent_params: Option<AgentParams>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_tick_hz")]
    pub tick_hz: u32,
    #[serde(default = "default_sensor_hz")]
    pub sensor_hz: u32,
    #[serde(default)]
    pub plate_noise: PlateNoise,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn default_modality() -> ModalityKind {
    ModalityKind::Spot
}

fn default_agent() -> AgentChoice {
    AgentChoice::Preset(AgentPreset::Ideal)
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_tick_hz() -> u32 {
    10
}

fn default_sensor_hz() -> u32 {
    1000
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            model: None,
            modality: default_modality(),
            agent: default_agent(),
            agent_params: None,
            seed: 0,
            out_dir: default_out_dir(),
            tick_hz: default_tick_hz(),
            sensor_hz: default_sensor_hz(),
            plate_noise: PlateNoise::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tick_hz == 0 || self.sensor_hz == 0 {
            return Err(Error::Config("tick and sensor rates must be positive".into()));
        }
        if !self.sensor_hz.is_multiple_of(self.tick_hz) {
            return Err(Error::Config(format!(
                "tick rate {} Hz does not divide sensor rate {} Hz",
                self.tick_hz, self.sensor_hz
            )));
        }
        if 1000 % self.tick_hz != 0 {
            return Err(Error::Config(format!("tick rate {} Hz is not a whole number of ms", self.tick_hz)));
        }
        if !(self.plate_noise.cop_sigma >= 0.0 && self.plate_noise.grf_sigma >= 0.0) {
            return Err(Error::Config("plate noise must be non-negative".into()));
        }
        if let Some(p) = &self.agent_params {
            p.validate()?;
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.tick_hz)
    }

    pub fn tick_ms(&self) -> u32 {
        1000 / self.tick_hz
    }

    /// Sensor samples averaged into one tick.
    pub fn decimation(&self) -> u32 {
        self.sensor_hz / self.tick_hz
    }

    pub fn load_model(&self) -> Result<HumanModel64> {
        match &self.model {
            None => Ok(HumanModel64::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                HumanModel64::from_json(&text)
            }
        }
    }

    /// Parameters of the configured simulated agent; `None` for live sessions.
    pub fn agent_params(&self) -> Option<AgentParams> {
        match (self.agent, &self.agent_params) {
            (AgentChoice::Live, _) => None,
            (_, Some(p)) => Some(*p),
            (AgentChoice::Preset(p), None) => Some(p.params()),
        }
    }

    pub fn feedback(&self, modality: ModalityKind) -> FeedbackConfig<f64> {
        FeedbackConfig {
            tick_ms: self.tick_ms(),
            ..FeedbackConfig::new(modality)
        }
    }
}

/// Top-level config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub session: SessionConfig,
    pub protocol: ProtocolSpec,
}

impl ExperimentConfig {
    pub fn new(session: SessionConfig, protocol: ProtocolSpec) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            session,
            protocol,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.session.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // model paths are relative to the config file
        if let (Some(model), Some(dir)) = (&cfg.session.model, path.parent()) {
            if model.is_relative() {
                cfg.session.model = Some(dir.join(model));
            }
        }
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Loads the model and checks the protocol against it.
    pub fn validate(&self) -> Result<HumanModel64> {
        self.session.validate()?;
        let model = self.session.load_model()?;
        self.protocol.validate(&model)?;
        Ok(model)
    }
}
