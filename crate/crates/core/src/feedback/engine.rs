use serde::{Deserialize, Serialize};

use super::command::{select_level, Amplitudes, DeviceCommand, Level, LevelThresholds};
use super::encode::{encode, PulseShape, RAMP_STEPS};
use super::error::{default_xi, error_magnitude, guided_angles, select_target_joint, ErrorVector};
use super::placement::{Direction, ModalityKind, PlacementRegistry};
use crate::body::Posture;
use crate::error::{Error, Result};
use crate::joint::{GuidedJoint, N_GUIDED};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeedbackConfig<T> {
    pub modality: ModalityKind,
    #[serde(default = "default_xi")]
    pub xi: [T; N_GUIDED],
    #[serde(default)]
    pub thresholds: LevelThresholds<T>,
    #[serde(default)]
    pub amplitudes: Amplitudes,
    #[serde(default = "default_pulse_ms")]
    pub pulse_ms: u32,
    #[serde(default = "default_tick_ms")]
    pub tick_ms: u32,
    #[serde(default)]
    pub placements: PlacementRegistry,
}

fn default_pulse_ms() -> u32 {
    400
}

fn default_tick_ms() -> u32 {
    100
}

impl<T: Scalar> FeedbackConfig<T> {
    pub fn new(modality: ModalityKind) -> Self {
        Self {
            modality,
            xi: default_xi(),
            thresholds: LevelThresholds::default(),
            amplitudes: Amplitudes::default(),
            pulse_ms: default_pulse_ms(),
            tick_ms: default_tick_ms(),
            placements: PlacementRegistry::standard(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.xi.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::Config("maximum errors must be positive".into()));
        }
        if self.pulse_ms == 0 || self.tick_ms == 0 {
            return Err(Error::Config("pulse and tick durations must be positive".into()));
        }
        self.thresholds.validate()?;
        self.amplitudes.validate()?;
        self.placements.validate_for(self.modality)
    }

    pub fn shape(&self) -> PulseShape {
        PulseShape {
            amplitudes: self.amplitudes,
            pulse_ms: self.pulse_ms,
        }
    }

    /// Ticks between burst starts while the same cue stays active.
    ///
    /// SPOT repeats every tick. A RAMP burst lasts its three steps; a PATTERN
    /// burst lasts one pulse per unit plus one silent pulse.
    pub fn cycle_ticks(&self, joint: GuidedJoint) -> u32 {
        let pulses = match self.modality {
            ModalityKind::Spot => return 1,
            ModalityKind::Ramp => RAMP_STEPS,
            ModalityKind::Pattern => {
                self.placements.units(ModalityKind::Pattern, joint).len() as u32 + 1
            }
        };
        (pulses * self.pulse_ms).div_ceil(self.tick_ms).max(1)
    }
}

/// Cue currently being played.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveCue {
    pub joint: GuidedJoint,
    pub direction: Direction,
    pub level: Level,
}

/// Engine memory between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackState {
    pub modality: ModalityKind,
    /// Number of completed ticks.
    pub tick: u64,
    /// Time of the last tick in seconds.
    pub t: f64,
    /// Ticks since the current burst started, per guided joint.
    pub phase: [u32; N_GUIDED],
    pub dead_band: [bool; N_GUIDED],
    pub active: Option<ActiveCue>,
}

impl FeedbackState {
    pub fn new(modality: ModalityKind) -> Self {
        Self {
            modality,
            tick: 0,
            t: 0.0,
            phase: [0; N_GUIDED],
            dead_band: [true; N_GUIDED],
            active: None,
        }
    }
}

/// Result of one control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T> {
    pub commands: Vec<DeviceCommand>,
    pub eps: ErrorVector<T>,
    pub target: Option<ActiveCue>,
    /// True when `commands` starts a new burst rather than continuing one.
    pub burst_start: bool,
}

/// One tick of the guidance loop.
///
/// Pure in `(config, state, q_c, q_d, t)`: the same inputs always produce the
/// same commands and next state.
pub fn feedback_step<T: Scalar>(
    config: &FeedbackConfig<T>,
    state: &FeedbackState,
    q_c: &Posture<T>,
    q_d: &Posture<T>,
    t: T,
) -> Result<(StepOutput<T>, FeedbackState)> {
    if state.modality != config.modality {
        return Err(Error::Config(format!(
            "state is for {} but config selects {}",
            state.modality, config.modality
        )));
    }
    let qc = guided_angles(q_c);
    let qd = guided_angles(q_d);
    let eps = error_magnitude(&qc, &qd, &config.xi)?;

    let mut next = state.clone();
    next.tick += 1;
    next.t = t.as_f64();
    next.dead_band = std::array::from_fn(|i| eps.eps[i] < config.thresholds.dead_band);

    let Some(joint) = select_target_joint(&eps, config.thresholds.dead_band) else {
        next.phase = [0; N_GUIDED];
        next.active = None;
        let commands = config
            .placements
            .device_ids(config.modality)
            .into_iter()
            .map(DeviceCommand::off)
            .collect();
        let out = StepOutput {
            commands,
            eps,
            target: None,
            burst_start: false,
        };
        return Ok((out, next));
    };

    let j = joint.index();
    let cue = ActiveCue {
        joint,
        direction: Direction::from_error(qc[j], qd[j]),
        level: select_level(eps.eps[j], &config.thresholds),
    };
    let restart = state.active != Some(cue) || state.phase[j] + 1 >= config.cycle_ticks(joint);
    next.active = Some(cue);
    let mut phase = [0; N_GUIDED];
    let commands = if restart {
        encode(config.modality, &config.placements, joint, cue.direction, cue.level, &config.shape())?
    } else {
        phase[j] = state.phase[j] + 1;
        Vec::new()
    };
    next.phase = phase;
    let out = StepOutput {
        commands,
        eps,
        target: Some(cue),
        burst_start: restart,
    };
    Ok((out, next))
}

/// Owns a configuration and advances its state one tick at a time.
#[derive(Debug, Clone)]
pub struct FeedbackEngine<T> {
    config: FeedbackConfig<T>,
    state: FeedbackState,
}

impl<T: Scalar> FeedbackEngine<T> {
    pub fn new(config: FeedbackConfig<T>) -> Result<Self> {
        config.validate()?;
        let state = FeedbackState::new(config.modality);
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &FeedbackConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &FeedbackState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = FeedbackState::new(self.config.modality);
    }

    pub fn step(&mut self, q_c: &Posture<T>, q_d: &Posture<T>, t: T) -> Result<StepOutput<T>> {
        let (out, next) = feedback_step(&self.config, &self.state, q_c, q_d, t)?;
        self.state = next;
        Ok(out)
    }
}
