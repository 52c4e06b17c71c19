use super::command::{Amplitudes, DeviceCommand, Level};
use super::placement::{Direction, ModalityKind, PlacementRegistry};
use crate::error::{Error, Result};
use crate::joint::GuidedJoint;

/// Number of steps in one RAMP burst.
pub const RAMP_STEPS: u32 = 3;

/// Timing and amplitude settings shared by the encoders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub amplitudes: Amplitudes,
    pub pulse_ms: u32,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self {
            amplitudes: Amplitudes::default(),
            pulse_ms: 400,
        }
    }
}

/// One 400 ms pulse on the unit that repels the wearer toward the target.
pub fn encode_spot(
    placements: &PlacementRegistry,
    joint: GuidedJoint,
    direction: Direction,
    level: Level,
    shape: &PulseShape,
) -> Result<Vec<DeviceCommand>> {
    if level == Level::Off {
        return Ok(Vec::new());
    }
    let unit = placements.spot_unit(joint, direction.motion_sign())?;
    Ok(vec![DeviceCommand {
        device_id: unit.device_id,
        level,
        amplitude: shape.amplitudes.of(level),
        duration_ms: shape.pulse_ms,
        onset_ms: 0,
    }])
}

/// A full ramp burst on the joint's single unit.
///
/// Step `k` plays at `k * pulse_ms` with amplitude `λ(level) * (k + 1) / 3`.
/// The steps rise when `q_c > q_d` and fall otherwise.
pub fn encode_ramp(
    placements: &PlacementRegistry,
    joint: GuidedJoint,
    direction: Direction,
    level: Level,
    shape: &PulseShape,
) -> Result<Vec<DeviceCommand>> {
    if level == Level::Off {
        return Ok(Vec::new());
    }
    let units = placements.units(ModalityKind::Ramp, joint);
    let [unit] = units.as_slice() else {
        return Err(Error::Registry(format!(
            "RAMP needs exactly one unit on {joint}, found {}",
            units.len()
        )));
    };
    let top = shape.amplitudes.of(level);
    Ok((0..RAMP_STEPS)
        .map(|k| {
            let step = match direction {
                Direction::Forward => k,
                Direction::Backward => RAMP_STEPS - 1 - k,
            };
            DeviceCommand {
                device_id: unit.device_id,
                level,
                amplitude: top * f64::from(step + 1) / f64::from(RAMP_STEPS),
                duration_ms: shape.pulse_ms,
                onset_ms: k * shape.pulse_ms,
            }
        })
        .collect())
}

/// One pulse per pattern unit, back to back, ascending index for `Forward`.
pub fn encode_pattern(
    placements: &PlacementRegistry,
    joint: GuidedJoint,
    direction: Direction,
    level: Level,
    shape: &PulseShape,
) -> Result<Vec<DeviceCommand>> {
    if level == Level::Off {
        return Ok(Vec::new());
    }
    let mut units = placements.units(ModalityKind::Pattern, joint);
    if units.len() < 2 {
        return Err(Error::Registry(format!(
            "PATTERN needs at least two units on {joint}, found {}",
            units.len()
        )));
    }
    if direction == Direction::Backward {
        units.reverse();
    }
    Ok(units
        .iter()
        .zip(0u32..)
        .map(|(u, k)| DeviceCommand {
            device_id: u.device_id,
            level,
            amplitude: shape.amplitudes.of(level),
            duration_ms: shape.pulse_ms,
            onset_ms: k * shape.pulse_ms,
        })
        .collect())
}

pub fn encode(
    modality: ModalityKind,
    placements: &PlacementRegistry,
    joint: GuidedJoint,
    direction: Direction,
    level: Level,
    shape: &PulseShape,
) -> Result<Vec<DeviceCommand>> {
    match modality {
        ModalityKind::Spot => encode_spot(placements, joint, direction, level, shape),
        ModalityKind::Ramp => encode_ramp(placements, joint, direction, level, shape),
        ModalityKind::Pattern => encode_pattern(placements, joint, direction, level, shape),
    }
}
