//! Directional vibrotactile guidance: error normalization, joint and level
//! selection, the SPOT, RAMP and PATTERN encoders, and a device emulator.

mod command;
mod emulator;
mod encode;
mod engine;
mod error;
mod placement;

pub use command::{
    read_frame, select_level, write_frame, Amplitudes, CommandFrame, DeviceCommand, Level,
    LevelThresholds,
};
pub use emulator::{CommandBus, DeviceEmulator, DeviceSpec, ScheduledPulse};
pub use encode::{encode, encode_pattern, encode_ramp, encode_spot, PulseShape, RAMP_STEPS};
pub use engine::{feedback_step, ActiveCue, FeedbackConfig, FeedbackEngine, FeedbackState, StepOutput};
pub use error::{default_xi, error_magnitude, guided_angles, select_target_joint, ErrorVector};
pub use placement::{DevicePlacement, Direction, ModalityKind, PlacementRegistry};
