use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::{Joint, N_JOINTS};
use crate::Scalar;

/// Version of the model file layout understood by this crate.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Rigid link of the chain. `com_ratio` is measured from the proximal (ground-side) joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub name: String,
    pub length: T,
    pub mass: T,
    pub com_ratio: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit<T> {
    pub joint: Joint,
    pub min_deg: T,
    pub max_deg: T,
}

/// Foot contact geometry in the sagittal plane, relative to the ankle's ground projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootGeometry<T> {
    pub heel_offset: T,
    pub toe_offset: T,
    /// Abscissa of the ankle in the world frame.
    #[serde(default)]
    pub ankle_x: T,
}

/// On-disk layout of a model definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelFile<T> {
    pub schema_version: u32,
    pub segments: Vec<Segment<T>>,
    pub joint_limits: Vec<JointLimit<T>>,
    pub foot: FootGeometry<T>,
    pub gravity: T,
}

/// Planar sagittal human model: shank, thigh, trunk, upper arm, forearm+hand.
///
/// Constructed only through [`HumanModel::new`] (or deserialization, which calls it),
/// so every instance satisfies the chain invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "T: Scalar",
    try_from = "ModelFile<T>",
    into = "ModelFile<T>"
)]
pub struct HumanModel<T> {
    segments: Vec<Segment<T>>,
    limits: [JointLimit<T>; N_JOINTS],
    foot: FootGeometry<T>,
    gravity: T,
    total_mass: T,
}

impl<T: Scalar> HumanModel<T> {
    pub fn new(
        segments: Vec<Segment<T>>,
        limits: [JointLimit<T>; N_JOINTS],
        foot: FootGeometry<T>,
        gravity: T,
    ) -> Result<Self> {
        if segments.len() != N_JOINTS {
            return Err(Error::Model(format!(
                "expected {N_JOINTS} segments, got {}",
                segments.len()
            )));
        }
        for s in &segments {
            if !(s.length > T::zero()) {
                return Err(Error::Model(format!("segment {} has non-positive length", s.name)));
            }
            if !(s.mass >= T::zero()) {
                return Err(Error::Model(format!("segment {} has negative mass", s.name)));
            }
            if !(s.com_ratio >= T::zero() && s.com_ratio <= T::one()) {
                return Err(Error::Model(format!(
                    "segment {} com_ratio outside [0, 1]",
                    s.name
                )));
            }
        }
        for (i, lim) in limits.iter().enumerate() {
            if lim.joint.index() != i {
                return Err(Error::Model(format!(
                    "joint limits out of chain order at position {i} ({})",
                    lim.joint
                )));
            }
            if !(lim.min_deg < lim.max_deg) {
                return Err(Error::Model(format!("joint {} has q_min >= q_max", lim.joint)));
            }
        }
        if !(foot.heel_offset < foot.toe_offset) {
            return Err(Error::Model("heel_offset must be smaller than toe_offset".into()));
        }
        if !(gravity > T::zero()) {
            return Err(Error::Model("gravity must be positive".into()));
        }
        let total_mass = segments.iter().fold(T::zero(), |acc, s| acc + s.mass);
        Ok(Self {
            segments,
            limits,
            foot,
            gravity,
            total_mass,
        })
    }

    /// Stand-in anthropometry scaled from body mass (kg) and stature (m).
    ///
    /// Mass fractions: shank+feet 0.122, thigh 0.200, trunk with head 0.578,
    /// upper arms 0.056, forearms+hands 0.044. Length fractions of stature:
    /// 0.246, 0.245, 0.288, 0.186, 0.190 (elbow to grip).
    pub fn anthropometric(body_mass: T, stature: T) -> Result<Self> {
        let table: [(&str, f64, f64, f64); N_JOINTS] = [
            ("shank", 0.246, 0.122, 0.432),
            ("thigh", 0.245, 0.200, 0.567),
            ("trunk", 0.288, 0.578, 0.626),
            ("upper_arm", 0.186, 0.056, 0.436),
            ("forearm", 0.190, 0.044, 0.524),
        ];
        let segments = table
            .iter()
            .map(|&(name, len, mass, com)| Segment {
                name: name.to_string(),
                length: stature * T::lit(len),
                mass: body_mass * T::lit(mass),
                com_ratio: T::lit(com),
            })
            .collect();
        Self::new(
            segments,
            default_limits(),
            FootGeometry {
                heel_offset: T::lit(-0.05),
                toe_offset: T::lit(0.20),
                ankle_x: T::zero(),
            },
            T::lit(9.81),
        )
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn segment(&self, joint: Joint) -> &Segment<T> {
        &self.segments[joint.index()]
    }

    pub fn limits(&self) -> &[JointLimit<T>; N_JOINTS] {
        &self.limits
    }

    pub fn limit(&self, joint: Joint) -> JointLimit<T> {
        self.limits[joint.index()]
    }

    pub fn foot(&self) -> &FootGeometry<T> {
        &self.foot
    }

    pub fn gravity(&self) -> T {
        self.gravity
    }

    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    /// Copy of the model with the whole stance translated along x.
    pub fn with_ankle_x(&self, ankle_x: T) -> Self {
        let mut m = self.clone();
        m.foot.ankle_x = ankle_x;
        m
    }

    /// Copy of the model with replaced joint limits.
    pub fn with_limits(&self, limits: [JointLimit<T>; N_JOINTS]) -> Result<Self> {
        Self::new(self.segments.clone(), limits, self.foot, self.gravity)
    }

    pub fn to_file(&self) -> ModelFile<T> {
        self.clone().into()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

impl Default for HumanModel<f64> {
    fn default() -> Self {
        Self::anthropometric(70.0, 1.76).expect("default anthropometry is valid")
    }
}

impl Default for HumanModel<f32> {
    fn default() -> Self {
        Self::anthropometric(70.0, 1.76).expect("default anthropometry is valid")
    }
}

/// ankle [-30, 30], knee [0, 135], trunk [-15, 90], shoulder [-180, 30], elbow [-145, 0] degrees.
pub fn default_limits<T: Scalar>() -> [JointLimit<T>; N_JOINTS] {
    let raw = [(-30.0, 30.0), (0.0, 135.0), (-15.0, 90.0), (-180.0, 30.0), (-145.0, 0.0)];
    std::array::from_fn(|i| JointLimit {
        joint: Joint::ALL[i],
        min_deg: T::lit(raw[i].0),
        max_deg: T::lit(raw[i].1),
    })
}

impl<T: Scalar> TryFrom<ModelFile<T>> for HumanModel<T> {
    type Error = Error;

    fn try_from(file: ModelFile<T>) -> Result<Self> {
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "unsupported schema_version {} (expected {MODEL_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let limits: [JointLimit<T>; N_JOINTS] = file.joint_limits.try_into().map_err(
            |v: Vec<JointLimit<T>>| {
                Error::Model(format!("expected {N_JOINTS} joint limits, got {}", v.len()))
            },
        )?;
        Self::new(file.segments, limits, file.foot, file.gravity)
    }
}

impl<T: Scalar> From<HumanModel<T>> for ModelFile<T> {
    fn from(m: HumanModel<T>) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            segments: m.segments,
            joint_limits: m.limits.to_vec(),
            foot: m.foot,
            gravity: m.gravity,
        }
    }
}
