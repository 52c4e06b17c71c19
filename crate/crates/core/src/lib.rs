//! Planar human statics, ergonomic posture optimization and directional
//! vibrotactile guidance.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`). The `*64` aliases below
//! fix the scalar to `f64`, which is what logs, wire frames and the harness use.

// `!(a < b)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod error;
pub mod feedback;
pub mod joint;
pub mod loading;
pub mod metrics;
pub mod posture_opt;
pub mod scalar;
pub mod wearer;

mod linalg;

pub use error::{Error, Result};
pub use joint::{GuidedJoint, Joint, N_GUIDED, N_JOINTS};
pub use scalar::Scalar;

pub type HumanModel64 = body::HumanModel<f64>;
pub type HumanModel32 = body::HumanModel<f32>;
pub type Posture64 = body::Posture<f64>;
pub type Posture32 = body::Posture<f32>;
pub type Point64 = body::Point<f64>;
pub type SescParams64 = body::SescParams<f64>;
pub type LoadSpec64 = loading::LoadSpec<f64>;
pub type TorqueVector64 = loading::TorqueVector<f64>;
pub type PlateReading64 = loading::PlateReading<f64>;
pub type OptimizationSpec64 = posture_opt::OptimizationSpec<f64>;
pub type ConstraintReport64 = posture_opt::ConstraintReport<f64>;
pub type ErrorVector64 = feedback::ErrorVector<f64>;
pub type FeedbackEngine64 = feedback::FeedbackEngine<f64>;
pub type TrialLog64 = metrics::TrialLog<f64>;
pub type TickRecord64 = metrics::TickRecord<f64>;
