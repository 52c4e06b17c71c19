use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Discrete vibration amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    Off,
    L1,
    L2,
    L3,
}

/// Normalized amplitude λ of each level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Default for Amplitudes {
    fn default() -> Self {
        Self {
            l1: 0.33,
            l2: 0.66,
            l3: 1.0,
        }
    }
}

impl Amplitudes {
    pub fn of(&self, level: Level) -> f64 {
        match level {
            Level::Off => 0.0,
            Level::L1 => self.l1,
            Level::L2 => self.l2,
            Level::L3 => self.l3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.l1 && self.l1 < self.l2 && self.l2 < self.l3 && self.l3 <= 1.0) {
            return Err(Error::Config("amplitudes must satisfy 0 < L1 < L2 < L3 <= 1".into()));
        }
        Ok(())
    }
}

/// Error thresholds separating the levels. Errors below `dead_band` are not signalled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelThresholds<T> {
    pub dead_band: T,
    pub l2: T,
    pub l3: T,
}

impl<T: Scalar> Default for LevelThresholds<T> {
    fn default() -> Self {
        Self {
            dead_band: T::lit(0.05),
            l2: T::lit(0.15),
            l3: T::lit(0.30),
        }
    }
}

impl<T: Scalar> LevelThresholds<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dead_band > T::zero() && self.dead_band < self.l2 && self.l2 < self.l3) {
            return Err(Error::Config("level thresholds must be increasing and positive".into()));
        }
        Ok(())
    }
}

/// Larger errors map to stronger vibration.
pub fn select_level<T: Scalar>(eps: T, th: &LevelThresholds<T>) -> Level {
    if eps < th.dead_band {
        Level::Off
    } else if eps < th.l2 {
        Level::L1
    } else if eps < th.l3 {
        Level::L2
    } else {
        Level::L3
    }
}

/// Addressed vibration instruction.
///
/// `amplitude` equals the level's λ except for ramp steps, which scale it by
/// the step fraction. `onset_ms` is relative to the tick that emitted it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceCommand {
    pub device_id: u16,
    pub level: Level,
    #[serde(rename = "lambda")]
    pub amplitude: f64,
    pub duration_ms: u32,
    pub onset_ms: u32,
}

impl DeviceCommand {
    pub fn off(device_id: u16) -> Self {
        Self {
            device_id,
            level: Level::Off,
            amplitude: 0.0,
            duration_ms: 0,
            onset_ms: 0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.level == Level::Off
    }
}

/// One command as it travels to a device or UI bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandFrame {
    pub tick: u64,
    #[serde(flatten)]
    pub command: DeviceCommand,
}

/// Writes `frame` as a big-endian `u32` byte length followed by its JSON body.
pub fn write_frame<W: Write>(out: &mut W, frame: &CommandFrame) -> io::Result<()> {
    let body = serde_json::to_vec(frame).map_err(io::Error::other)?;
    let len = u32::try_from(body.len()).map_err(io::Error::other)?;
    out.write_all(&len.to_be_bytes())?;
    out.write_all(&body)
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(input: &mut R) -> io::Result<Option<CommandFrame>> {
    let mut len = [0u8; 4];
    match input.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let mut body = vec![0u8; u32::from_be_bytes(len) as usize];
    input.read_exact(&mut body)?;
    serde_json::from_slice(&body)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
