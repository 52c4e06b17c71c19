use std::sync::mpsc::{channel, Receiver, Sender};

use serde::{Deserialize, Serialize};

use super::command::{CommandFrame, DeviceCommand};
use super::placement::PlacementRegistry;
use crate::error::{Error, Result};

/// Static description of an emulated vibrotactile unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub carrier_hz: f64,
    pub mass_g: f64,
    pub amplitude_levels: u8,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        Self {
            carrier_hz: 121.0,
            mass_g: 28.0,
            amplitude_levels: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPulse {
    pub device_id: u16,
    pub start_ms: u64,
    pub end_ms: u64,
    pub amplitude: f64,
}

/// Plays command batches on a set of virtual units.
///
/// A non-empty batch replaces everything still scheduled, so a new burst cuts
/// off the previous one. Empty batches leave the schedule alone.
#[derive(Debug, Clone)]
pub struct DeviceEmulator {
    spec: DeviceSpec,
    devices: Vec<u16>,
    schedule: Vec<ScheduledPulse>,
    batches: u64,
}

impl DeviceEmulator {
    pub fn new(registry: &PlacementRegistry, spec: DeviceSpec) -> Self {
        let mut devices: Vec<u16> = registry.placements().iter().map(|p| p.device_id).collect();
        devices.sort_unstable();
        Self {
            spec,
            devices,
            schedule: Vec::new(),
            batches: 0,
        }
    }

    pub fn spec(&self) -> &DeviceSpec {
        &self.spec
    }

    pub fn devices(&self) -> &[u16] {
        &self.devices
    }

    pub fn batches_applied(&self) -> u64 {
        self.batches
    }

    pub fn schedule(&self) -> &[ScheduledPulse] {
        &self.schedule
    }

    /// Applies the commands emitted at `now_ms`.
    pub fn apply(&mut self, now_ms: u64, commands: &[DeviceCommand]) -> Result<()> {
        if let Some(c) = commands.iter().find(|c| self.devices.binary_search(&c.device_id).is_err()) {
            return Err(Error::Registry(format!("unknown device id {}", c.device_id)));
        }
        if commands.is_empty() {
            return Ok(());
        }
        self.batches += 1;
        self.schedule = commands
            .iter()
            .filter(|c| !c.is_off() && c.duration_ms > 0)
            .map(|c| {
                let start_ms = now_ms + u64::from(c.onset_ms);
                ScheduledPulse {
                    device_id: c.device_id,
                    start_ms,
                    end_ms: start_ms + u64::from(c.duration_ms),
                    amplitude: c.amplitude,
                }
            })
            .collect();
        Ok(())
    }

    /// Applies frames that share a tick. The tick period fixes the start time.
    pub fn apply_frames(&mut self, frames: &[CommandFrame], tick_ms: u64) -> Result<()> {
        let Some(first) = frames.first() else {
            return Ok(());
        };
        if frames.iter().any(|f| f.tick != first.tick) {
            return Err(Error::Input("frames of one batch must share a tick".into()));
        }
        let commands: Vec<DeviceCommand> = frames.iter().map(|f| f.command).collect();
        self.apply(first.tick * tick_ms, &commands)
    }

    pub fn amplitude_at(&self, device_id: u16, t_ms: u64) -> f64 {
        self.schedule
            .iter()
            .filter(|p| p.device_id == device_id && p.start_ms <= t_ms && t_ms < p.end_ms)
            .fold(0.0, |a, p| a.max(p.amplitude))
    }

    /// Amplitude of every device at `t_ms`, in device id order.
    pub fn sample(&self, t_ms: u64) -> Vec<(u16, f64)> {
        self.devices.iter().map(|&d| (d, self.amplitude_at(d, t_ms))).collect()
    }
}

/// Fan-out of command batches to any number of consumers.
#[derive(Debug, Default)]
pub struct CommandBus {
    subscribers: Vec<Sender<Vec<CommandFrame>>>,
}

impl CommandBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&mut self) -> Receiver<Vec<CommandFrame>> {
        let (tx, rx) = channel();
        self.subscribers.push(tx);
        rx
    }

    /// Sends to every live subscriber, dropping the ones that hung up.
    pub fn publish(&mut self, batch: &[CommandFrame]) {
        self.subscribers.retain(|tx| tx.send(batch.to_vec()).is_ok());
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.len()
    }
}
