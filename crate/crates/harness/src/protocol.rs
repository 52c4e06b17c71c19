//! Protocol definitions and the starting postures of the ergonomic conditions.

use serde::{Deserialize, Serialize};
use vibroguide_core::body::{forward_kinematics, support_polygon};
use vibroguide_core::loading::{simulate_plate, LoadSpec};
pub use vibroguide_core::metrics::ProtocolKind;
use vibroguide_core::feedback::ModalityKind;
use vibroguide_core::{Error, GuidedJoint, HumanModel64, Joint, LoadSpec64, Posture64, Result};

/// Three consecutive targets for one guided joint, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSequence {
    pub joint: GuidedJoint,
    pub targets: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityTargets {
    pub torso: [f64; 3],
    pub shoulder: [f64; 3],
    pub elbow: [f64; 3],
}

impl Default for ModalityTargets {
    fn default() -> Self {
        Self {
            torso: [-10.0, 30.0, 60.0],
            shoulder: [10.0, -45.0, -90.0],
            elbow: [-45.0, -90.0, -125.0],
        }
    }
}

impl ModalityTargets {
    pub fn sequence(&self, joint: GuidedJoint) -> TargetSequence {
        let targets = match joint {
            GuidedJoint::Torso => self.torso,
            GuidedJoint::Shoulder => self.shoulder,
            GuidedJoint::Elbow => self.elbow,
        };
        TargetSequence { joint, targets }
    }

    pub fn sequences(&self) -> [TargetSequence; 3] {
        GuidedJoint::ALL.map(|j| self.sequence(j))
    }
}

/// One ergonomic condition: a load picked up at `distance` metres in front of the heel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgonomicCondition {
    pub id: u32,
    pub distance: f64,
    pub load_mass: f64,
    pub object_height: f64,
}

impl ErgonomicCondition {
    pub fn load(&self) -> Result<LoadSpec64> {
        LoadSpec::new(self.load_mass)
    }

    pub fn label(&self) -> String {
        format!("condition_{}", self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgonomicSpec {
    pub load_mass: f64,
    pub distances: Vec<f64>,
    #[serde(default = "default_object_height")]
    pub object_height: f64,
    /// Allowed deviation of the object height during optimization, metres.
    #[serde(default = "default_z_th")]
    pub z_th: f64,
    #[serde(default = "default_ergonomic_modality")]
    pub modality: ModalityKind,
}

fn default_ergonomic_modality() -> ModalityKind {
    ModalityKind::Spot
}

fn default_object_height() -> f64 {
    0.5
}

fn default_z_th() -> f64 {
    0.1
}

impl Default for ErgonomicSpec {
    fn default() -> Self {
        Self {
            load_mass: 4.0,
            distances: vec![0.2, 0.5, 0.8],
            object_height: default_object_height(),
            z_th: default_z_th(),
            modality: default_ergonomic_modality(),
        }
    }
}

impl ErgonomicSpec {
    pub fn conditions(&self) -> Vec<ErgonomicCondition> {
        self.distances
            .iter()
            .enumerate()
            .map(|(i, &distance)| ErgonomicCondition {
                id: i as u32 + 1,
                distance,
                load_mass: self.load_mass,
                object_height: self.object_height,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    #[serde(default)]
    pub targets: ModalityTargets,
    #[serde(default)]
    pub ergonomic: ErgonomicSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    180.0
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            targets: ModalityTargets::default(),
            ergonomic: ErgonomicSpec::default(),
            seed: 0,
            timeout_s: default_timeout(),
        }
    }

    pub fn validate(&self, model: &HumanModel64) -> Result<()> {
        for seq in self.targets.sequences() {
            let lim = model.limit(seq.joint.chain_joint());
            if let Some(t) = seq.targets.iter().find(|&&t| !(t >= lim.min_deg && t <= lim.max_deg)) {
                return Err(Error::Config(format!(
                    "{} target {t} outside [{}, {}]",
                    seq.joint, lim.min_deg, lim.max_deg
                )));
            }
        }
        let e = &self.ergonomic;
        if e.distances.is_empty() || e.distances.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("ergonomic distances must be positive".into()));
        }
        if !(e.load_mass >= 0.0) || !(e.object_height > 0.0) || !(e.z_th >= 0.0) {
            return Err(Error::Config("invalid ergonomic load, height or z_th".into()));
        }
        if !(self.timeout_s > 0.0) {
            return Err(Error::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

/// Knee and elbow angles tried by the reaching heuristic, in order, degrees.
pub const REACH_CANDIDATES: [(f64, f64); 6] =
    [(15.0, -20.0), (15.0, 0.0), (30.0, 0.0), (45.0, 0.0), (60.0, 0.0), (0.0, 0.0)];

/// Ankle resolution of the reaching heuristic, degrees.
pub const REACH_ANKLE_STEP: f64 = 0.05;

/// Starting posture for an ergonomic condition.
///
/// Reaching heuristic: knee and elbow are held at the first entry of
/// [`REACH_CANDIDATES`] that admits a valid stance. Trunk and shoulder place the
/// hand at `(heel + distance, object_height)` by two-link inverse kinematics (hip
/// to shoulder, shoulder to hand), taking the more upright trunk. The ankle is
/// scanned in [`REACH_ANKLE_STEP`] increments; among the stances that respect the
/// joint limits and keep the loaded centre of pressure on the foot, the one with
/// the centre of pressure closest to the middle of the foot wins.
pub fn initial_posture(model: &HumanModel64, cond: &ErgonomicCondition) -> Result<Posture64> {
    let load = cond.load()?;
    let support = support_polygon(model)?;
    let target = (model.foot().ankle_x + model.foot().heel_offset + cond.distance, cond.object_height);
    let lim = model.limit(Joint::Ankle);
    let steps = ((lim.max_deg - lim.min_deg) / REACH_ANKLE_STEP).round() as usize;
    for &(knee, elbow) in &REACH_CANDIDATES {
        let best = (0..=steps)
            .filter_map(|i| {
                let ankle = lim.min_deg + i as f64 * REACH_ANKLE_STEP;
                let q = reach(model, ankle, knee, elbow, target).ok()?;
                let cop = simulate_plate(model, &q, &load).cop_x;
                (q.within_limits(model) && support.contains(cop)).then(|| ((cop - support.center()).abs(), q))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, q)) = best {
            return Ok(q);
        }
    }
    Err(Error::Config(format!(
        "{}: no balanced stance reaches ({:.3}, {:.3})",
        cond.label(),
        target.0,
        target.1
    )))
}

/// Trunk and shoulder angles putting the hand at `target` for a given ankle angle.
fn reach(model: &HumanModel64, ankle: f64, knee: f64, elbow: f64, target: (f64, f64)) -> Result<Posture64> {
    let base = Posture64::zero()
        .with(Joint::Ankle, ankle)
        .with(Joint::Knee, knee)
        .with(Joint::Elbow, elbow);
    let kp = forward_kinematics(model, &base);
    let hip = kp.joint(Joint::Hip);
    let l1 = model.segment(Joint::Hip).length;
    let lu = model.segment(Joint::Shoulder).length;
    let lf = model.segment(Joint::Elbow).length;
    let e = elbow.to_radians();
    // shoulder-to-hand chord with the elbow fixed, and its angle to the upper arm
    let l2 = (lu * lu + lf * lf + 2.0 * lu * lf * e.cos()).sqrt();
    let delta = (lf * e.sin()).atan2(lu + lf * e.cos());
    let (dx, dz) = (target.0 - hip.x, target.1 - hip.z);
    let r = (dx * dx + dz * dz).sqrt();
    if r > l1 + l2 || r < (l1 - l2).abs() {
        return Err(Error::Config(format!("hand target {target:?} out of reach")));
    }
    let alpha = ((l1 * l1 + r * r - l2 * l2) / (2.0 * l1 * r)).clamp(-1.0, 1.0).acos();
    let beta = dx.atan2(dz);
    let trunk = beta - alpha;
    let shoulder_pt = (hip.x + l1 * trunk.sin(), hip.z + l1 * trunk.cos());
    let gamma = (target.0 - shoulder_pt.0).atan2(target.1 - shoulder_pt.1);
    let upper = gamma - delta;
    let thigh = ankle.to_radians() - knee.to_radians();
    let hip_deg = (trunk - thigh).to_degrees();
    let shoulder_deg = wrap_deg((upper - trunk - std::f64::consts::PI).to_degrees());
    Ok(base.with(Joint::Hip, hip_deg).with(Joint::Shoulder, shoulder_deg))
}

fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_lands_on_the_condition_point_and_stance_is_balanced() {
        let m = HumanModel64::default();
        for cond in ErgonomicSpec::default().conditions() {
            let q = initial_posture(&m, &cond).unwrap();
            let kp = forward_kinematics(&m, &q);
            assert!((kp.hand.x - (-0.05 + cond.distance)).abs() < 1e-9, "{cond:?} {q:?}");
            assert!((kp.hand.z - 0.5).abs() < 1e-9);
            let cop = simulate_plate(&m, &q, &cond.load().unwrap()).cop_x;
            assert!(support_polygon(&m).unwrap().contains(cop));
            assert!(q.within_limits(&m));
        }
    }

    #[test]
    fn default_targets_are_within_limits() {
        ProtocolSpec::new(ProtocolKind::ModalityTest)
            .validate(&HumanModel64::default())
            .unwrap();
    }

    #[test]
    fn bad_distance_is_rejected() {
        let mut p = ProtocolSpec::new(ProtocolKind::ErgonomicTest);
        p.ergonomic.distances = vec![0.2, 0.0];
        assert!(p.validate(&HumanModel64::default()).is_err());
    }
}
