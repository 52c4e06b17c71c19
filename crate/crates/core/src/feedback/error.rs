use serde::{Deserialize, Serialize};

use crate::body::Posture;
use crate::error::{Error, Result};
use crate::joint::{GuidedJoint, N_GUIDED};
use crate::Scalar;

/// Normalized absolute error per guided joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorVector<T> {
    pub eps: [T; N_GUIDED],
    pub xi: [T; N_GUIDED],
}

impl<T: Scalar> ErrorVector<T> {
    pub fn get(&self, joint: GuidedJoint) -> T {
        self.eps[joint.index()]
    }

    pub fn max(&self) -> T {
        self.eps.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Signed angular error `q_d - q_c` in degrees is not recoverable from `eps`
    /// alone; this returns its magnitude.
    pub fn degrees(&self, joint: GuidedJoint) -> T {
        self.eps[joint.index()] * self.xi[joint.index()]
    }
}

/// Maximum errors for trunk, shoulder and elbow: 90, 180 and 145 degrees.
pub fn default_xi<T: Scalar>() -> [T; N_GUIDED] {
    [T::lit(90.0), T::lit(180.0), T::lit(145.0)]
}

/// Trunk, shoulder and elbow angles of a full posture.
pub fn guided_angles<T: Scalar>(posture: &Posture<T>) -> [T; N_GUIDED] {
    GuidedJoint::ALL.map(|g| posture.get(g.chain_joint()))
}

/// `|q_c - q_d| / ξ` elementwise.
pub fn error_magnitude<T: Scalar>(
    q_c: &[T; N_GUIDED],
    q_d: &[T; N_GUIDED],
    xi: &[T; N_GUIDED],
) -> Result<ErrorVector<T>> {
    if let Some(bad) = xi.iter().position(|&x| !(x > T::zero())) {
        return Err(Error::Config(format!(
            "maximum error for {} must be positive",
            GuidedJoint::ALL[bad]
        )));
    }
    Ok(ErrorVector {
        eps: std::array::from_fn(|i| (q_c[i] - q_d[i]).abs() / xi[i]),
        xi: *xi,
    })
}

/// Joint with the largest error, or `None` when every error is inside the dead-band.
///
/// Ties go to the earlier joint in trunk, shoulder, elbow order.
pub fn select_target_joint<T: Scalar>(eps: &ErrorVector<T>, dead_band: T) -> Option<GuidedJoint> {
    let mut best: Option<(GuidedJoint, T)> = None;
    for g in GuidedJoint::ALL {
        let e = eps.get(g);
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((g, e));
        }
    }
    best.filter(|&(_, e)| e >= dead_band).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ev(eps: [f64; 3]) -> ErrorVector<f64> {
        ErrorVector {
            eps,
            xi: default_xi(),
        }
    }

    #[test]
    fn torso_thirty_to_sixty() {
        let e = error_magnitude(&[30.0, 0.0, 0.0], &[60.0, 0.0, 0.0], &default_xi()).unwrap();
        assert_abs_diff_eq!(e.eps[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(e.eps[1], 0.0);
    }

    #[test]
    fn elbow_error() {
        let e = error_magnitude(&[0.0, 0.0, -45.0], &[0.0, 0.0, -125.0], &default_xi()).unwrap();
        assert_abs_diff_eq!(e.eps[2], 80.0 / 145.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.eps[2], 0.5517, epsilon = 1e-4);
    }

    #[test]
    fn identical_configurations() {
        let q = [12.0, -30.0, -60.0];
        let e = error_magnitude(&q, &q, &default_xi()).unwrap();
        assert_eq!(e.eps, [0.0; 3]);
    }

    #[test]
    fn non_positive_xi_is_config_error() {
        let r = error_magnitude(&[0.0; 3], &[1.0; 3], &[90.0, 0.0, 145.0]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn strict_argmax() {
        assert_eq!(select_target_joint(&ev([0.1, 0.5, 0.2]), 0.05), Some(GuidedJoint::Shoulder));
    }

    #[test]
    fn tie_goes_to_torso() {
        assert_eq!(select_target_joint(&ev([0.3, 0.3, 0.1]), 0.05), Some(GuidedJoint::Torso));
        assert_eq!(select_target_joint(&ev([0.1, 0.3, 0.3]), 0.05), Some(GuidedJoint::Shoulder));
    }

    #[test]
    fn dead_band_selects_nothing() {
        assert_eq!(select_target_joint(&ev([0.04, 0.049, 0.01]), 0.05), None);
        assert_eq!(select_target_joint(&ev([0.04, 0.05, 0.01]), 0.05), Some(GuidedJoint::Shoulder));
    }
}
