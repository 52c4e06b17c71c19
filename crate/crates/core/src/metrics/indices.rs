use serde::{Deserialize, Serialize};

use super::log::TickRecord;
use crate::error::{Error, Result};
use crate::feedback::{select_target_joint, ErrorVector};
use crate::joint::{GuidedJoint, N_GUIDED, N_JOINTS};
use crate::loading::TorqueVector;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub dead_band: f64,
    /// Length in seconds of the closing window used by success and final error.
    pub window: f64,
    /// Joint speeds below this, in deg/s, count as standing still.
    pub moving_threshold: f64,
    /// Initial torques below this, in N·m, give no decrement ratio.
    pub torque_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            dead_band: 0.05,
            window: 2.0,
            moving_threshold: 0.5,
            torque_threshold: 1e-6,
        }
    }
}

fn within<T: Scalar>(r: &TickRecord<T>, dead_band: f64) -> bool {
    r.eps.iter().all(|e| e.as_f64() < dead_band)
}

/// Index of the first tick of the closing window.
fn window_start<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<usize> {
    let (Some(first), Some(last)) = (ticks.first(), ticks.last()) else {
        return Err(Error::Evaluation("empty log".into()));
    };
    let end = last.t.as_f64();
    if end - first.t.as_f64() < cfg.window - 1e-9 {
        return Err(Error::Evaluation(format!(
            "log lasts {:.3} s, shorter than the {} s window",
            end - first.t.as_f64(),
            cfg.window
        )));
    }
    Ok(ticks.partition_point(|r| r.t.as_f64() < end - cfg.window - 1e-9))
}

/// True when some tick of the closing window has every error inside the dead-band.
pub fn success<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<bool> {
    let s = window_start(ticks, cfg)?;
    Ok(ticks[s..].iter().any(|r| within(r, cfg.dead_band)))
}

/// Time from the first tick to the start of the in-dead-band run that reaches
/// into the closing window. `None` for unsuccessful logs.
pub fn reaching_time<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<Option<T>> {
    let s = window_start(ticks, cfg)?;
    let Some(mut f) = (s..ticks.len()).find(|&i| within(&ticks[i], cfg.dead_band)) else {
        return Ok(None);
    };
    while f > 0 && within(&ticks[f - 1], cfg.dead_band) {
        f -= 1;
    }
    Ok(Some(ticks[f].t - ticks[0].t))
}

/// Path length, chord velocity and path speed over the reaching interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachKinematics<T> {
    pub duration: T,
    /// Θ: total travelled angle over the guided joints, degrees.
    pub distance: T,
    /// Net angular change per guided joint, degrees.
    pub chord: [T; N_GUIDED],
    /// v: summed net change over duration, deg/s.
    pub velocity: T,
    /// Path length over duration, deg/s.
    pub speed: T,
    /// Zero duration: velocity and speed are reported as 0.
    pub degenerate: bool,
}

pub fn reach_kinematics<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<Option<ReachKinematics<T>>> {
    let Some(duration) = reaching_time(ticks, cfg)? else {
        return Ok(None);
    };
    let t_f = ticks[0].t + duration;
    let end = ticks.partition_point(|r| r.t <= t_f);
    let span = &ticks[..end];
    let mut distance = T::zero();
    let mut chord = [T::zero(); N_GUIDED];
    for g in GuidedJoint::ALL {
        let j = g.chain_joint();
        for w in span.windows(2) {
            distance = distance + (w[1].q_c.get(j) - w[0].q_c.get(j)).abs();
        }
        chord[g.index()] = (span[span.len() - 1].q_c.get(j) - span[0].q_c.get(j)).abs();
    }
    let net = chord.iter().fold(T::zero(), |a, &b| a + b);
    let degenerate = !(duration > T::zero());
    let (velocity, speed) = if degenerate {
        (T::zero(), T::zero())
    } else {
        (net / duration, distance / duration)
    };
    Ok(Some(ReachKinematics {
        duration,
        distance,
        chord,
        velocity,
        speed,
        degenerate,
    }))
}

pub fn angular_distance<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<Option<T>> {
    Ok(reach_kinematics(ticks, cfg)?.map(|k| k.distance))
}

pub fn reaching_velocity<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<Option<T>> {
    Ok(reach_kinematics(ticks, cfg)?.map(|k| k.velocity))
}

pub fn path_speed<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<Option<T>> {
    Ok(reach_kinematics(ticks, cfg)?.map(|k| k.speed))
}

/// Smallest error per guided joint over the closing window, in percent.
pub fn final_error<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<[T; N_GUIDED]> {
    let s = window_start(ticks, cfg)?;
    let hundred = T::lit(100.0);
    Ok(std::array::from_fn(|j| {
        ticks[s..].iter().map(|r| r.eps[j]).fold(T::infinity(), T::min) * hundred
    }))
}

/// Share of moving ticks in which the guided joint moved away from its target, in percent.
///
/// The guided joint of step `i-1 → i` is the argmax joint at tick `i-1`.
/// Steps that cross a segment boundary or have no guided joint are skipped.
pub fn confusion_index<T: Scalar>(ticks: &[TickRecord<T>], cfg: &MetricsConfig) -> Result<Option<T>> {
    if ticks.is_empty() {
        return Err(Error::Evaluation("empty log".into()));
    }
    let mut moving = 0usize;
    let mut wrong = 0usize;
    for w in ticks.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.segment != b.segment {
            continue;
        }
        let ev = ErrorVector {
            eps: a.eps,
            xi: [T::one(); N_GUIDED],
        };
        let Some(g) = select_target_joint(&ev, T::lit(cfg.dead_band)) else {
            continue;
        };
        let j = g.chain_joint();
        let dt = (b.t - a.t).as_f64();
        if !(dt > 0.0) {
            return Err(Error::Evaluation(format!("tick {} does not advance time", b.tick)));
        }
        let v = (b.q_c.get(j) - a.q_c.get(j)).as_f64() / dt;
        if v.abs() < cfg.moving_threshold {
            continue;
        }
        moving += 1;
        let want = (a.q_d.get(j) - a.q_c.get(j)).as_f64();
        if v * want < 0.0 {
            wrong += 1;
        }
    }
    Ok((moving > 0).then(|| T::lit(100.0 * wrong as f64 / moving as f64)))
}

/// Percent reduction of each joint's overloading torque magnitude.
pub fn decrement_ratio<T: Scalar>(
    tau_init: &TorqueVector<T>,
    tau_final: &TorqueVector<T>,
    threshold: T,
) -> [Option<T>; N_JOINTS] {
    std::array::from_fn(|j| {
        let i = tau_init.0[j].abs();
        (i > threshold).then(|| T::lit(100.0) * (i - tau_final.0[j].abs()) / i)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Posture;
    use crate::joint::Joint;
    use approx::assert_abs_diff_eq;

    fn rec(tick: u64, hip: f64, target: f64) -> TickRecord<f64> {
        TickRecord {
            tick,
            t: tick as f64 * 0.1,
            segment: 0,
            q_c: Posture::zero().with(Joint::Hip, hip),
            q_d: Posture::zero().with(Joint::Hip, target),
            eps: [(hip - target).abs() / 90.0, 0.0, 0.0],
            commands: vec![],
            tau_overload: None,
        }
    }

    #[test]
    fn decrement_examples() {
        let d = decrement_ratio(
            &TorqueVector([20.0, 10.0, 7.0, 0.0, 5.0]),
            &TorqueVector([10.0, 13.678, 7.0, 1.0, -2.5]),
            1e-6,
        );
        assert_abs_diff_eq!(d[0].unwrap(), 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1].unwrap(), -36.78, epsilon = 1e-10);
        assert_abs_diff_eq!(d[2].unwrap(), 0.0);
        assert_eq!(d[3], None);
        assert_abs_diff_eq!(d[4].unwrap(), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn short_log_is_error() {
        let ticks: Vec<_> = (0..10).map(|k| rec(k, 0.0, 0.0)).collect();
        assert!(matches!(success(&ticks, &MetricsConfig::default()), Err(Error::Evaluation(_))));
        assert!(final_error(&ticks, &MetricsConfig::default()).is_err());
    }

    #[test]
    fn stationary_log_has_no_confusion_index() {
        let ticks: Vec<_> = (0..30).map(|k| rec(k, 20.0, 0.0)).collect();
        assert_eq!(confusion_index(&ticks, &MetricsConfig::default()).unwrap(), None);
    }

    #[test]
    fn at_target_reaches_instantly() {
        let ticks: Vec<_> = (0..30).map(|k| rec(k, 0.0, 0.0)).collect();
        let cfg = MetricsConfig::default();
        assert!(success(&ticks, &cfg).unwrap());
        assert_eq!(reaching_time(&ticks, &cfg).unwrap(), Some(0.0));
        let k = reach_kinematics(&ticks, &cfg).unwrap().unwrap();
        assert!(k.degenerate);
        assert_eq!((k.distance, k.velocity, k.speed), (0.0, 0.0, 0.0));
    }
}
