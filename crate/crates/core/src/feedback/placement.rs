use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::GuidedJoint;

/// Feedback encoding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModalityKind {
    Spot,
    Ramp,
    Pattern,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 3] = [ModalityKind::Spot, ModalityKind::Ramp, ModalityKind::Pattern];
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModalityKind::Spot => "SPOT",
            ModalityKind::Ramp => "RAMP",
            ModalityKind::Pattern => "PATTERN",
        })
    }
}

impl std::str::FromStr for ModalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SPOT" => Ok(ModalityKind::Spot),
            "RAMP" => Ok(ModalityKind::Ramp),
            "PATTERN" => Ok(ModalityKind::Pattern),
            _ => Err(Error::Config(format!("unknown modality {s:?}"))),
        }
    }
}

/// Side of the target the joint currently sits on.
///
/// `Forward` means `q_c > q_d`, so the joint angle has to decrease.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn from_error<T: PartialOrd>(q_c: T, q_d: T) -> Direction {
        if q_c > q_d {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }

    /// Sign of the joint motion that closes the error.
    pub fn motion_sign(self) -> i8 {
        match self {
            Direction::Forward => -1,
            Direction::Backward => 1,
        }
    }

    pub fn from_motion_sign(sign: i8) -> Option<Direction> {
        match sign {
            -1 => Some(Direction::Forward),
            1 => Some(Direction::Backward),
            _ => None,
        }
    }
}

/// A single vibrotactile unit on the body.
///
/// `repulsion_sign` is the joint-angle direction the wearer is pushed toward when
/// the unit vibrates. `index` orders the units of a pattern row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevicePlacement {
    pub device_id: u16,
    pub joint: GuidedJoint,
    pub modality: ModalityKind,
    #[serde(default)]
    pub index: u8,
    #[serde(default)]
    pub repulsion_sign: i8,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub label: String,
}

fn default_spacing() -> f64 {
    0.05
}

/// Units expected per joint for a modality: torso first.
fn expected_units(modality: ModalityKind, joint: GuidedJoint) -> usize {
    match (modality, joint) {
        (ModalityKind::Spot, _) => 2,
        (ModalityKind::Ramp, _) => 1,
        (ModalityKind::Pattern, GuidedJoint::Torso) => 3,
        (ModalityKind::Pattern, _) => 2,
    }
}

/// Lookup table from joints to the units that guide them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DevicePlacement>", into = "Vec<DevicePlacement>")]
pub struct PlacementRegistry {
    placements: Vec<DevicePlacement>,
}

impl PlacementRegistry {
    pub fn new(placements: Vec<DevicePlacement>) -> Result<Self> {
        let mut ids: Vec<u16> = placements.iter().map(|p| p.device_id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Registry(format!("device id {} registered twice", w[0])));
        }
        for p in &placements {
            if !(p.spacing > 0.0) {
                return Err(Error::Registry(format!("device {} has non-positive spacing", p.device_id)));
            }
        }
        Ok(Self { placements })
    }

    /// Layout with the units of all three modalities.
    ///
    /// | joint    | SPOT (repulsion)          | RAMP | PATTERN    |
    /// |----------|---------------------------|------|------------|
    /// | torso    | 1 chest (-1), 2 back (+1) | 21   | 11, 12, 13 |
    /// | shoulder | 3 front (+1), 4 back (-1) | 22   | 14, 15     |
    /// | elbow    | 5 front (+1), 6 back (-1) | 23   | 16, 17     |
    pub fn standard() -> Self {
        let spot = |id, joint, sign, label: &str| DevicePlacement {
            device_id: id,
            joint,
            modality: ModalityKind::Spot,
            index: 0,
            repulsion_sign: sign,
            spacing: default_spacing(),
            label: label.to_string(),
        };
        let row = |id, joint, modality, index, label: &str| DevicePlacement {
            device_id: id,
            joint,
            modality,
            index,
            repulsion_sign: 0,
            spacing: default_spacing(),
            label: label.to_string(),
        };
        use GuidedJoint::*;
        use ModalityKind::*;
        Self::new(vec![
            spot(1, Torso, -1, "chest"),
            spot(2, Torso, 1, "upper back"),
            spot(3, Shoulder, 1, "upper arm front"),
            spot(4, Shoulder, -1, "upper arm back"),
            spot(5, Elbow, 1, "forearm front"),
            spot(6, Elbow, -1, "forearm back"),
            row(11, Torso, Pattern, 0, "back row 1"),
            row(12, Torso, Pattern, 1, "back row 2"),
            row(13, Torso, Pattern, 2, "back row 3"),
            row(14, Shoulder, Pattern, 0, "upper arm 1"),
            row(15, Shoulder, Pattern, 1, "upper arm 2"),
            row(16, Elbow, Pattern, 0, "forearm 1"),
            row(17, Elbow, Pattern, 1, "forearm 2"),
            row(21, Torso, Ramp, 0, "back"),
            row(22, Shoulder, Ramp, 0, "upper arm"),
            row(23, Elbow, Ramp, 0, "forearm"),
        ])
        .expect("standard layout is valid")
    }

    pub fn placements(&self) -> &[DevicePlacement] {
        &self.placements
    }

    pub fn get(&self, device_id: u16) -> Option<&DevicePlacement> {
        self.placements.iter().find(|p| p.device_id == device_id)
    }

    /// Units of one joint and modality, sorted by pattern index.
    pub fn units(&self, modality: ModalityKind, joint: GuidedJoint) -> Vec<&DevicePlacement> {
        let mut v: Vec<_> = self
            .placements
            .iter()
            .filter(|p| p.modality == modality && p.joint == joint)
            .collect();
        v.sort_by_key(|p| (p.index, p.device_id));
        v
    }

    /// Device ids used by a modality, ascending.
    pub fn device_ids(&self, modality: ModalityKind) -> Vec<u16> {
        let mut ids: Vec<u16> = self
            .placements
            .iter()
            .filter(|p| p.modality == modality)
            .map(|p| p.device_id)
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn spot_unit(&self, joint: GuidedJoint, motion_sign: i8) -> Result<&DevicePlacement> {
        self.units(ModalityKind::Spot, joint)
            .into_iter()
            .find(|p| p.repulsion_sign == motion_sign)
            .ok_or_else(|| {
                Error::Registry(format!("no SPOT unit on {joint} repelling toward {motion_sign:+}"))
            })
    }

    /// Checks that every guided joint has the unit set the modality needs.
    pub fn validate_for(&self, modality: ModalityKind) -> Result<()> {
        for joint in GuidedJoint::ALL {
            let units = self.units(modality, joint);
            let want = expected_units(modality, joint);
            if units.len() != want {
                return Err(Error::Registry(format!(
                    "{modality} needs {want} units on {joint}, found {}",
                    units.len()
                )));
            }
            match modality {
                ModalityKind::Spot => {
                    let mut signs: Vec<i8> = units.iter().map(|p| p.repulsion_sign).collect();
                    signs.sort_unstable();
                    if signs != [-1, 1] {
                        return Err(Error::Registry(format!(
                            "SPOT units on {joint} must repel in opposite directions"
                        )));
                    }
                }
                ModalityKind::Pattern => {
                    if units.iter().enumerate().any(|(i, p)| p.index as usize != i) {
                        return Err(Error::Registry(format!(
                            "PATTERN units on {joint} must be indexed 0..{want}"
                        )));
                    }
                }
                ModalityKind::Ramp => {}
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<DevicePlacement>> for PlacementRegistry {
    type Error = Error;

    fn try_from(v: Vec<DevicePlacement>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PlacementRegistry> for Vec<DevicePlacement> {
    fn from(r: PlacementRegistry) -> Self {
        r.placements
    }
}

impl Default for PlacementRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_layout_serves_every_modality() {
        let reg = PlacementRegistry::standard();
        for m in ModalityKind::ALL {
            reg.validate_for(m).unwrap();
        }
        assert_eq!(reg.device_ids(ModalityKind::Pattern).len(), 7);
        assert_eq!(reg.device_ids(ModalityKind::Spot).len(), 6);
    }

    #[test]
    fn chest_repels_backward() {
        let reg = PlacementRegistry::standard();
        assert_eq!(reg.spot_unit(GuidedJoint::Torso, -1).unwrap().device_id, 1);
        assert_eq!(reg.spot_unit(GuidedJoint::Torso, 1).unwrap().device_id, 2);
    }

    #[test]
    fn missing_unit_is_registry_error() {
        let reg = PlacementRegistry::new(
            PlacementRegistry::standard()
                .placements()
                .iter()
                .filter(|p| p.device_id != 15)
                .cloned()
                .collect(),
        )
        .unwrap();
        assert!(matches!(reg.validate_for(ModalityKind::Pattern), Err(Error::Registry(_))));
        reg.validate_for(ModalityKind::Spot).unwrap();
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut p = PlacementRegistry::standard().placements().to_vec();
        p[1].device_id = p[0].device_id;
        assert!(PlacementRegistry::new(p).is_err());
    }

    #[test]
    fn json_round_trip() {
        let reg = PlacementRegistry::standard();
        let s = serde_json::to_string(&reg).unwrap();
        let back: PlacementRegistry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, reg);
    }

    #[test]
    fn direction_signs() {
        assert_eq!(Direction::from_error(30.0, 10.0), Direction::Forward);
        assert_eq!(Direction::Forward.motion_sign(), -1);
        assert_eq!(Direction::from_motion_sign(1), Some(Direction::Backward));
        assert_eq!("pattern".parse::<ModalityKind>().unwrap(), ModalityKind::Pattern);
    }
}
