use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of joints in the sagittal chain.
pub const N_JOINTS: usize = 5;
/// Number of joints that receive vibrotactile guidance.
pub const N_GUIDED: usize = 3;

/// Joints of the planar chain, ordered from the ground up.
///
/// Each joint sits at the proximal end of the segment with the same index:
/// ankle/shank, knee/thigh, hip/trunk, shoulder/upper arm, elbow/forearm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Ankle,
    Knee,
    Hip,
    Shoulder,
    Elbow,
}

impl Joint {
    pub const ALL: [Joint; N_JOINTS] = [
        Joint::Ankle,
        Joint::Knee,
        Joint::Hip,
        Joint::Shoulder,
        Joint::Elbow,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Joint> {
        Self::ALL.get(i).copied()
    }

    pub fn short(self) -> &'static str {
        match self {
            Joint::Ankle => "AK",
            Joint::Knee => "KN",
            Joint::Hip => "HP",
            Joint::Shoulder => "SH",
            Joint::Elbow => "EL",
        }
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Joint::Ankle => "ankle",
            Joint::Knee => "knee",
            Joint::Hip => "hip",
            Joint::Shoulder => "shoulder",
            Joint::Elbow => "elbow",
        };
        f.write_str(s)
    }
}

/// Joints guided by the wearable units. The order doubles as the argmax tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidedJoint {
    Torso,
    Shoulder,
    Elbow,
}

impl GuidedJoint {
    pub const ALL: [GuidedJoint; N_GUIDED] =
        [GuidedJoint::Torso, GuidedJoint::Shoulder, GuidedJoint::Elbow];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<GuidedJoint> {
        Self::ALL.get(i).copied()
    }

    /// The chain joint this guided joint drives. The trunk angle is the hip joint.
    pub fn chain_joint(self) -> Joint {
        match self {
            GuidedJoint::Torso => Joint::Hip,
            GuidedJoint::Shoulder => Joint::Shoulder,
            GuidedJoint::Elbow => Joint::Elbow,
        }
    }

    pub fn from_chain(joint: Joint) -> Option<GuidedJoint> {
        match joint {
            Joint::Hip => Some(GuidedJoint::Torso),
            Joint::Shoulder => Some(GuidedJoint::Shoulder),
            Joint::Elbow => Some(GuidedJoint::Elbow),
            _ => None,
        }
    }
}

impl fmt::Display for GuidedJoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GuidedJoint::Torso => "torso",
            GuidedJoint::Shoulder => "shoulder",
            GuidedJoint::Elbow => "elbow",
        };
        f.write_str(s)
    }
}
