//! Experiment orchestration for vibrotactile guidance: protocols, closed-loop
//! trials, campaigns and reports, and the live-session endpoint.

// `!(a < b)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod live;
pub mod protocol;
pub mod report;
pub mod serve;
pub mod trial;

pub use config::{AgentChoice, ExperimentConfig, SessionConfig};
pub use protocol::{ProtocolKind, ProtocolSpec};
