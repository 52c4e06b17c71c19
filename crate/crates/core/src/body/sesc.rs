//! Statically equivalent serial chain: a CoM predictor that is linear in the
//! segment orientation vectors and can be identified from (posture, CoM) samples.

use serde::{Deserialize, Serialize};

use crate::body::kinematics::{axis, segment_orientations, Point, Posture};
use crate::body::HumanModel;
use crate::error::{Error, Result};
use crate::joint::N_JOINTS;
use crate::linalg::symmetric_eigen;
use crate::Scalar;

/// Number of identified parameters: two per segment plus the planar base offset.
pub const SESC_PARAM_COUNT: usize = 2 * N_JOINTS + 2;

const SEGMENT_NAMES: [&str; N_JOINTS] = ["shank", "thigh", "trunk", "upper_arm", "forearm"];

/// Per-segment coefficients along/across the segment axis plus the base offset.
///
/// `com = offset + Σ along_i · a(φ_i) + across_i · n(φ_i)` with
/// `a = (sin φ, cos φ)` and `n = (cos φ, -sin φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SescParams<T> {
    pub along: [T; N_JOINTS],
    pub across: [T; N_JOINTS],
    pub offset: Point<T>,
}

impl<T: Scalar> SescParams<T> {
    /// Exact parameters of a known model (useful as a reference, not used by calibration).
    pub fn from_model(model: &HumanModel<T>) -> Self {
        let total = model.total_mass();
        let segs = model.segments();
        let along = std::array::from_fn(|i| {
            let distal: T = segs[i + 1..].iter().fold(T::zero(), |a, s| a + s.mass);
            (segs[i].mass * segs[i].com_ratio + distal) * segs[i].length / total
        });
        Self {
            along,
            across: [T::zero(); N_JOINTS],
            offset: Point::new(model.foot().ankle_x, T::zero()),
        }
    }

    fn as_vector(&self) -> [T; SESC_PARAM_COUNT] {
        let mut v = [T::zero(); SESC_PARAM_COUNT];
        for i in 0..N_JOINTS {
            v[2 * i] = self.along[i];
            v[2 * i + 1] = self.across[i];
        }
        v[2 * N_JOINTS] = self.offset.x;
        v[2 * N_JOINTS + 1] = self.offset.z;
        v
    }

    fn from_vector(v: &[T]) -> Self {
        Self {
            along: std::array::from_fn(|i| v[2 * i]),
            across: std::array::from_fn(|i| v[2 * i + 1]),
            offset: Point::new(v[2 * N_JOINTS], v[2 * N_JOINTS + 1]),
        }
    }
}

fn param_name(k: usize) -> String {
    if k < 2 * N_JOINTS {
        let dir = if k.is_multiple_of(2) { "along" } else { "across" };
        format!("{}.{dir}", SEGMENT_NAMES[k / 2])
    } else if k == 2 * N_JOINTS {
        "offset.x".into()
    } else {
        "offset.z".into()
    }
}

/// The two regression rows (x and z) contributed by one posture.
fn design_rows<T: Scalar>(posture: &Posture<T>) -> [[T; SESC_PARAM_COUNT]; 2] {
    let phis = segment_orientations(posture);
    let mut rx = [T::zero(); SESC_PARAM_COUNT];
    let mut rz = [T::zero(); SESC_PARAM_COUNT];
    for (i, &phi) in phis.iter().enumerate() {
        let a = axis(phi);
        // across-axis unit vector is the along-axis one rotated by -90 degrees
        rx[2 * i] = a.x;
        rz[2 * i] = a.z;
        rx[2 * i + 1] = a.z;
        rz[2 * i + 1] = -a.x;
    }
    rx[2 * N_JOINTS] = T::one();
    rz[2 * N_JOINTS + 1] = T::one();
    [rx, rz]
}

/// Least-squares identification of the SESC parameters.
///
/// Fails with [`Error::RankDeficient`] when the samples do not excite every
/// parameter direction; the error lists the dominant parameters of each
/// unidentified direction.
pub fn sesc_calibrate<T: Scalar>(samples: &[(Posture<T>, Point<T>)]) -> Result<SescParams<T>> {
    const N: usize = SESC_PARAM_COUNT;
    let mut normal = vec![T::zero(); N * N];
    let mut rhs = [T::zero(); N];
    for (posture, com) in samples {
        let rows = design_rows(posture);
        for (row, y) in rows.iter().zip([com.x, com.z]) {
            for i in 0..N {
                rhs[i] = rhs[i] + row[i] * y;
                for j in 0..N {
                    normal[i * N + j] = normal[i * N + j] + row[i] * row[j];
                }
            }
        }
    }
    let (eig, vecs) = symmetric_eigen(&normal, N);
    let max_eig = eig.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    // relative cut-off on the normal matrix, i.e. ~eps^(1/3) on singular values
    let cutoff = max_eig * T::epsilon().powf(T::lit(2.0 / 3.0));
    let deficient: Vec<usize> = (0..N)
        .filter(|&k| max_eig == T::zero() || eig[k] <= cutoff)
        .collect();
    if !deficient.is_empty() {
        let directions = deficient
            .iter()
            .map(|&k| {
                let col: Vec<T> = (0..N).map(|i| vecs[i * N + k]).collect();
                let peak = col.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
                let names: Vec<String> = col
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c.abs() >= peak * T::lit(0.5))
                    .map(|(i, _)| param_name(i))
                    .collect();
                names.join("+")
            })
            .collect();
        return Err(Error::RankDeficient {
            rank: N - deficient.len(),
            expected: N,
            directions,
        });
    }
    let mut theta = [T::zero(); N];
    for k in 0..N {
        let proj = (0..N).fold(T::zero(), |a, i| a + vecs[i * N + k] * rhs[i]) / eig[k];
        for i in 0..N {
            theta[i] = theta[i] + proj * vecs[i * N + k];
        }
    }
    Ok(SescParams::from_vector(&theta))
}

/// CoM predicted by a calibrated chain.
pub fn sesc_com<T: Scalar>(params: &SescParams<T>, posture: &Posture<T>) -> Point<T> {
    let theta = params.as_vector();
    let rows = design_rows(posture);
    let dot = |r: &[T; SESC_PARAM_COUNT]| r.iter().zip(theta.iter()).fold(T::zero(), |a, (&x, &y)| a + x * y);
    Point::new(dot(&rows[0]), dot(&rows[1]))
}
