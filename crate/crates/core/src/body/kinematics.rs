use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::HumanModel;
use crate::error::{Error, Result};
use crate::joint::{Joint, N_JOINTS};
use crate::scalar::deg2rad;
use crate::Scalar;

/// Point in the sagittal plane: `x` forward, `z` up, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub z: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, z: T) -> Self {
        Self { x, z }
    }

    pub fn distance(&self, other: &Self) -> T {
        ((self.x - other.x).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// Joint-angle configuration in degrees, in chain order.
///
/// | joint    | zero                      | positive                  |
/// |----------|---------------------------|---------------------------|
/// | ankle    | shank vertical            | shank tilts forward       |
/// | knee     | leg straight              | flexion (thigh tilts back)|
/// | hip      | trunk aligned with thigh  | trunk flexes forward      |
/// | shoulder | arm hanging along trunk   | extension (arm backward)  |
/// | elbow    | forearm aligned with arm  | hyperextension            |
///
/// Shoulder and elbow flexion are therefore negative, e.g. shoulder -90 holds the
/// arm horizontal in front of an upright trunk and elbow -90 bends the forearm
/// at a right angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Posture<T> {
    pub angles: [T; N_JOINTS],
    #[serde(default)]
    pub timestamp: T,
}

impl<T: Scalar> Posture<T> {
    pub fn new(angles: [T; N_JOINTS]) -> Self {
        Self {
            angles,
            timestamp: T::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::new([T::zero(); N_JOINTS])
    }

    pub fn from_slice(angles: &[T]) -> Result<Self> {
        let arr: [T; N_JOINTS] = angles.try_into().map_err(|_| {
            Error::Input(format!(
                "posture has {} angles, model has {N_JOINTS} joints",
                angles.len()
            ))
        })?;
        Ok(Self::new(arr))
    }

    pub fn at(mut self, timestamp: T) -> Self {
        self.timestamp = timestamp;
        self
    }

    #[inline]
    pub fn get(&self, joint: Joint) -> T {
        self.angles[joint.index()]
    }

    #[inline]
    pub fn set(&mut self, joint: Joint, deg: T) {
        self.angles[joint.index()] = deg;
    }

    pub fn with(mut self, joint: Joint, deg: T) -> Self {
        self.set(joint, deg);
        self
    }

    /// True when every angle lies inside the model's joint limits (inclusive).
    pub fn within_limits(&self, model: &HumanModel<T>) -> bool {
        Joint::ALL.iter().all(|&j| {
            let lim = model.limit(j);
            let q = self.get(j);
            q >= lim.min_deg && q <= lim.max_deg
        })
    }

    pub fn clamped(mut self, model: &HumanModel<T>) -> Self {
        for j in Joint::ALL {
            let lim = model.limit(j);
            let q = self.get(j);
            self.set(j, q.max(lim.min_deg).min(lim.max_deg));
        }
        self
    }

    /// Uniform sample inside the joint limits.
    pub fn random_within<R: Rng + ?Sized>(model: &HumanModel<T>, rng: &mut R) -> Self {
        let mut p = Self::zero();
        for j in Joint::ALL {
            let lim = model.limit(j);
            let u = T::lit(rng.random::<f64>());
            p.set(j, lim.min_deg + (lim.max_deg - lim.min_deg) * u);
        }
        p
    }
}

/// Output of [`forward_kinematics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyPoints<T> {
    /// Joint centres in chain order (ankle, knee, hip, shoulder, elbow).
    pub joints: [Point<T>; N_JOINTS],
    /// Grasp point at the distal end of the forearm.
    pub hand: Point<T>,
    /// Height of a held object, equal to the hand height.
    pub z_obj: T,
}

impl<T: Scalar> KeyPoints<T> {
    pub fn joint(&self, joint: Joint) -> Point<T> {
        self.joints[joint.index()]
    }
}

/// Absolute segment orientations in radians, measured from the upward vertical,
/// positive when the distal end tilts forward.
pub fn segment_orientations<T: Scalar>(posture: &Posture<T>) -> [T; N_JOINTS] {
    let q = posture.angles.map(deg2rad);
    let shank = q[0];
    let thigh = shank - q[1];
    let trunk = thigh + q[2];
    let upper_arm = trunk + T::PI() + q[3];
    let forearm = upper_arm + q[4];
    [shank, thigh, trunk, upper_arm, forearm]
}

/// Unit vector along a segment with orientation `phi`.
#[inline]
pub(crate) fn axis<T: Scalar>(phi: T) -> Point<T> {
    Point::new(phi.sin(), phi.cos())
}

pub fn forward_kinematics<T: Scalar>(model: &HumanModel<T>, posture: &Posture<T>) -> KeyPoints<T> {
    let phis = segment_orientations(posture);
    let mut p = Point::new(model.foot().ankle_x, T::zero());
    let mut joints = [p; N_JOINTS];
    for (i, (seg, &phi)) in model.segments().iter().zip(phis.iter()).enumerate() {
        joints[i] = p;
        let a = axis(phi);
        p = Point::new(p.x + seg.length * a.x, p.z + seg.length * a.z);
    }
    KeyPoints {
        joints,
        hand: p,
        z_obj: p.z,
    }
}

/// Centre of mass of every segment, in chain order.
pub fn segment_coms<T: Scalar>(model: &HumanModel<T>, posture: &Posture<T>) -> [Point<T>; N_JOINTS] {
    let kp = forward_kinematics(model, posture);
    let phis = segment_orientations(posture);
    std::array::from_fn(|i| {
        let seg = &model.segments()[i];
        let a = axis(phis[i]);
        let r = seg.length * seg.com_ratio;
        let base = kp.joints[i];
        Point::new(base.x + r * a.x, base.z + r * a.z)
    })
}

/// Whole-body centre of mass. A massless model reports the ankle position.
pub fn whole_body_com<T: Scalar>(model: &HumanModel<T>, posture: &Posture<T>) -> Point<T> {
    let total = model.total_mass();
    let coms = segment_coms(model, posture);
    if total <= T::zero() {
        return Point::new(model.foot().ankle_x, T::zero());
    }
    let (mut x, mut z) = (T::zero(), T::zero());
    for (seg, c) in model.segments().iter().zip(coms.iter()) {
        x = x + seg.mass * c.x;
        z = z + seg.mass * c.z;
    }
    Point::new(x / total, z / total)
}
