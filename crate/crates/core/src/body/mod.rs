//! Planar sagittal body model: anthropometry, forward kinematics, centre of
//! mass, its SESC identification and the support polygon.

mod kinematics;
mod model;
mod sesc;
mod support;

pub use kinematics::{
    forward_kinematics, segment_coms, segment_orientations, whole_body_com, KeyPoints, Point,
    Posture,
};
pub use model::{
    default_limits, FootGeometry, HumanModel, JointLimit, ModelFile, Segment, MODEL_SCHEMA_VERSION,
};
pub use sesc::{sesc_calibrate, sesc_com, SescParams, SESC_PARAM_COUNT};
pub use support::{support_polygon, SupportPolygon};
