//! Static joint torques, simulated force-plate readings and the CoP-displacement
//! estimator of overloading joint torques.
//!
//! Torques are gravitational moments about each joint in N·m, positive when the
//! supported weight lies in front of the joint. Every joint of the chain lies on
//! the ground-to-hand path, so a hand load loads all five.

use std::ops::{Index, Sub};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::body::{forward_kinematics, segment_coms, sesc_com, whole_body_com, HumanModel, Posture, SescParams};
use crate::error::{Error, Result};
use crate::joint::{Joint, N_JOINTS};
use crate::Scalar;

/// External vertical load held at the grasp point (both hands as one planar point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec<T> {
    pub mass: T,
}

impl<T: Scalar> LoadSpec<T> {
    pub fn new(mass: T) -> Result<Self> {
        if !(mass >= T::zero()) {
            return Err(Error::Input("load mass must be non-negative".into()));
        }
        Ok(Self { mass })
    }

    pub fn none() -> Self {
        Self { mass: T::zero() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorqueVector<T>(pub [T; N_JOINTS]);

impl<T: Scalar> TorqueVector<T> {
    pub fn zero() -> Self {
        Self([T::zero(); N_JOINTS])
    }

    pub fn get(&self, joint: Joint) -> T {
        self.0[joint.index()]
    }

    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|t| t * k))
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
    }
}

impl<T> Index<Joint> for TorqueVector<T> {
    type Output = T;

    fn index(&self, joint: Joint) -> &T {
        &self.0[joint.index()]
    }
}

impl<T: Scalar> Sub for TorqueVector<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

/// Vertical force and centre of pressure from a single-axis plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateReading<T> {
    pub grf_z: T,
    pub cop_x: T,
}

/// Zero-mean Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlateNoise {
    pub cop_sigma: f64,
    pub grf_sigma: f64,
}

pub fn gravity_torques<T: Scalar>(model: &HumanModel<T>, posture: &Posture<T>) -> TorqueVector<T> {
    let kp = forward_kinematics(model, posture);
    let coms = segment_coms(model, posture);
    let g = model.gravity();
    let segs = model.segments();
    TorqueVector(std::array::from_fn(|k| {
        let xk = kp.joints[k].x;
        (k..N_JOINTS).fold(T::zero(), |acc, j| acc + segs[j].mass * g * (coms[j].x - xk))
    }))
}

pub fn loaded_torques<T: Scalar>(
    model: &HumanModel<T>,
    posture: &Posture<T>,
    load: &LoadSpec<T>,
) -> TorqueVector<T> {
    let kp = forward_kinematics(model, posture);
    let w = load.mass * model.gravity();
    let base = gravity_torques(model, posture);
    TorqueVector(std::array::from_fn(|k| base.0[k] + w * (kp.hand.x - kp.joints[k].x)))
}

/// Ground truth of the overloading torques: loaded minus unloaded statics.
pub fn overloading_torques_oracle<T: Scalar>(
    model: &HumanModel<T>,
    posture: &Posture<T>,
    load: &LoadSpec<T>,
) -> TorqueVector<T> {
    loaded_torques(model, posture, load) - gravity_torques(model, posture)
}

/// Noiseless plate reading for a static stance holding `load`.
pub fn simulate_plate<T: Scalar>(
    model: &HumanModel<T>,
    posture: &Posture<T>,
    load: &LoadSpec<T>,
) -> PlateReading<T> {
    let big_m = model.total_mass();
    let m = load.mass;
    let total = big_m + m;
    let x_com = whole_body_com(model, posture).x;
    let x_hand = forward_kinematics(model, posture).hand.x;
    let cop_x = if total > T::zero() {
        (big_m * x_com + m * x_hand) / total
    } else {
        model.foot().ankle_x
    };
    PlateReading {
        grf_z: total * model.gravity(),
        cop_x,
    }
}

pub fn simulate_plate_noisy<T: Scalar, R: Rng + ?Sized>(
    model: &HumanModel<T>,
    posture: &Posture<T>,
    load: &LoadSpec<T>,
    noise: &PlateNoise,
    rng: &mut R,
) -> PlateReading<T> {
    let clean = simulate_plate(model, posture, load);
    let draw = |sigma: f64, rng: &mut R| -> T {
        if sigma > 0.0 {
            T::lit(Normal::new(0.0, sigma).expect("finite sigma").sample(rng))
        } else {
            T::zero()
        }
    };
    let dc = draw(noise.cop_sigma, rng);
    let dg = draw(noise.grf_sigma, rng);
    PlateReading {
        grf_z: clean.grf_z + dg,
        cop_x: clean.cop_x + dc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig<T> {
    /// Loads lighter than this are reported as absent.
    pub min_load_mass: T,
}

impl<T: Scalar> Default for EstimatorConfig<T> {
    fn default() -> Self {
        Self {
            min_load_mass: T::lit(0.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverloadEstimate<T> {
    pub torques: TorqueVector<T>,
    pub load_detected: bool,
    pub load_mass: T,
    pub load_x: T,
}

/// Overloading torques from the gap between the measured CoP and the SESC-predicted one.
///
/// The load mass comes from the vertical-force surplus over body weight and its
/// abscissa from the CoP shift. Below `min_load_mass` the estimate is a zero vector
/// with `load_detected == false`.
pub fn estimate_overloading<T: Scalar>(
    plate: &PlateReading<T>,
    sesc: &SescParams<T>,
    model: &HumanModel<T>,
    posture: &Posture<T>,
    config: &EstimatorConfig<T>,
) -> Result<OverloadEstimate<T>> {
    if !(plate.grf_z > T::zero()) {
        return Err(Error::Input("plate reports no vertical force".into()));
    }
    let g = model.gravity();
    let big_m = model.total_mass();
    let load_mass = plate.grf_z / g - big_m;
    if load_mass < config.min_load_mass {
        return Ok(OverloadEstimate {
            torques: TorqueVector::zero(),
            load_detected: false,
            load_mass: T::zero(),
            load_x: T::zero(),
        });
    }
    let x_com = sesc_com(sesc, posture).x;
    let load_x = (plate.cop_x * (big_m + load_mass) - big_m * x_com) / load_mass;
    let kp = forward_kinematics(model, posture);
    let w = load_mass * g;
    Ok(OverloadEstimate {
        torques: TorqueVector(std::array::from_fn(|k| w * (load_x - kp.joints[k].x))),
        load_detected: true,
        load_mass,
        load_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model() -> HumanModel<f64> {
        HumanModel::default()
    }

    #[test]
    fn upright_arm_has_no_shoulder_or_elbow_torque() {
        let t = gravity_torques(&model(), &Posture::zero());
        assert_abs_diff_eq!(t[Joint::Shoulder], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[Joint::Elbow], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hip_torque_with_horizontal_trunk() {
        let m = model();
        let p = Posture::zero().with(Joint::Hip, 90.0);
        let t = gravity_torques(&m, &p);
        // independent summation: trunk CoM at com_ratio along the horizontal trunk,
        // arm folded back along the trunk from the shoulder
        let s = m.segments();
        let trunk_x = s[2].com_ratio * s[2].length;
        let upper_x = s[2].length - s[3].com_ratio * s[3].length;
        let fore_x = s[2].length - s[3].length - s[4].com_ratio * s[4].length;
        let expected = 9.81 * (s[2].mass * trunk_x + s[3].mass * upper_x + s[4].mass * fore_x);
        assert_abs_diff_eq!(t[Joint::Hip], expected, epsilon = 1e-10);
    }

    #[test]
    fn massless_model_has_no_gravity_torque() {
        let mut f = model().to_file();
        for s in &mut f.segments {
            s.mass = 0.0;
        }
        let m = HumanModel::try_from(f).unwrap();
        let t = gravity_torques(&m, &Posture::new([10.0, 30.0, 45.0, -60.0, -20.0]));
        assert_eq!(t, TorqueVector::zero());
    }

    #[test]
    fn zero_load_is_identity() {
        let m = model();
        let p = Posture::new([5.0, 20.0, 45.0, -60.0, -20.0]);
        assert_eq!(loaded_torques(&m, &p, &LoadSpec::none()), gravity_torques(&m, &p));
        assert_eq!(
            overloading_torques_oracle(&m, &p, &LoadSpec::none()).max_abs(),
            0.0
        );
    }

    #[test]
    fn hand_half_metre_ahead_of_hip() {
        let m = model();
        // upright legs, arm raised horizontally in front: hand ahead of the hip by the arm length;
        // bend the elbow until the horizontal offset is exactly 0.5 m
        let mut p = Posture::zero().with(Joint::Shoulder, -90.0);
        let s = m.segments();
        let (lu, lf) = (s[3].length, s[4].length);
        // hand x = lu + lf*cos(e) whichever way the forearm bends by e
        let e = ((0.5 - lu) / lf).acos().to_degrees();
        p.set(Joint::Elbow, -e);
        let kp = forward_kinematics(&m, &p);
        assert_abs_diff_eq!(kp.hand.x - kp.joint(Joint::Hip).x, 0.5, epsilon = 1e-12);
        let over = overloading_torques_oracle(&m, &p, &LoadSpec::new(4.0).unwrap());
        assert_abs_diff_eq!(over[Joint::Hip], 19.62, epsilon = 1e-9);
    }

    #[test]
    fn hand_above_joint_has_zero_lever() {
        let m = model();
        // arm straight up: hand directly above the shoulder and elbow
        let p = Posture::zero().with(Joint::Shoulder, -180.0);
        let over = overloading_torques_oracle(&m, &p, &LoadSpec::new(4.0).unwrap());
        assert_abs_diff_eq!(over[Joint::Shoulder], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(over[Joint::Elbow], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn plate_unloaded_and_weighted_mean() {
        let m = model();
        let p = Posture::new([0.0, 10.0, 30.0, -45.0, -30.0]);
        let r = simulate_plate(&m, &p, &LoadSpec::none());
        assert_abs_diff_eq!(r.cop_x, whole_body_com(&m, &p).x, epsilon = 1e-15);
        assert_abs_diff_eq!(r.grf_z, 70.0 * 9.81, epsilon = 1e-10);
        let w = (70.0 * 0.05 + 4.0 * 0.55) / 74.0;
        assert_abs_diff_eq!(w, 0.077027, epsilon = 1e-6);
    }

    #[test]
    fn plate_collinear_hand() {
        // a hand under the CoM leaves the CoP where it was
        let m = model();
        let p = Posture::zero();
        let com = whole_body_com(&m, &p).x;
        let hand = forward_kinematics(&m, &p).hand.x;
        assert_abs_diff_eq!(com, hand, epsilon = 1e-12);
        for mass in [0.5, 4.0, 20.0] {
            let r = simulate_plate(&m, &p, &LoadSpec::new(mass).unwrap());
            assert_abs_diff_eq!(r.cop_x, com, epsilon = 1e-12);
        }
    }

    #[test]
    fn estimator_reports_no_load() {
        let m = model();
        let p = Posture::new([0.0, 10.0, 30.0, -45.0, -30.0]);
        let sesc = SescParams::from_model(&m);
        let r = simulate_plate(&m, &p, &LoadSpec::none());
        let est = estimate_overloading(&r, &sesc, &m, &p, &EstimatorConfig::default()).unwrap();
        assert!(!est.load_detected);
        assert_eq!(est.torques, TorqueVector::zero());
    }

    #[test]
    fn estimator_matches_oracle_with_exact_chain() {
        let m = model();
        let p = Posture::new([3.0, 25.0, 50.0, -70.0, -40.0]);
        let load = LoadSpec::new(4.0).unwrap();
        let sesc = SescParams::from_model(&m);
        let r = simulate_plate(&m, &p, &load);
        let est = estimate_overloading(&r, &sesc, &m, &p, &EstimatorConfig::default()).unwrap();
        let oracle = overloading_torques_oracle(&m, &p, &load);
        assert!(est.load_detected);
        assert_abs_diff_eq!(est.load_mass, 4.0, epsilon = 1e-10);
        for j in Joint::ALL {
            assert_abs_diff_eq!(est.torques[j], oracle[j], epsilon = 1e-9 * oracle.max_abs());
        }
    }

    #[test]
    fn zero_force_is_input_error() {
        let m = model();
        let sesc = SescParams::from_model(&m);
        let r = PlateReading {
            grf_z: 0.0,
            cop_x: 0.0,
        };
        assert!(estimate_overloading(&r, &sesc, &m, &Posture::zero(), &EstimatorConfig::default()).is_err());
    }

    #[test]
    fn negative_load_rejected() {
        assert!(LoadSpec::new(-1.0f64).is_err());
    }
}
