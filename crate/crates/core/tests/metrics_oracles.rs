use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use vibroguide_core::loading::TorqueVector;
use vibroguide_core::metrics::{
    confusion_index, decrement_ratio, final_error, reach_kinematics, reaching_time, rm_anova_f, seq_score, success,
    sus_score, MetricsConfig, TickRecord,
};
use vibroguide_core::{Joint, Posture64};

const XI: [f64; 3] = [90.0, 180.0, 145.0];

fn tick(k: u64, q: [f64; 3], target: [f64; 3]) -> TickRecord<f64> {
    let pose = |a: [f64; 3]| {
        Posture64::zero()
            .with(Joint::Hip, a[0])
            .with(Joint::Shoulder, a[1])
            .with(Joint::Elbow, a[2])
    };
    TickRecord {
        tick: k,
        t: k as f64 * 0.1,
        segment: 0,
        q_c: pose(q),
        q_d: pose(target),
        eps: std::array::from_fn(|i| (q[i] - target[i]).abs() / XI[i]),
        commands: vec![],
        tau_overload: None,
    }
}

fn hip_log(path: &[f64], target: f64) -> Vec<TickRecord<f64>> {
    path.iter()
        .enumerate()
        .map(|(k, &h)| tick(k as u64, [h, 0.0, 0.0], [target, 0.0, 0.0]))
        .collect()
}

/// Trunk error shrinking at constant speed; the first tick inside 5% is t = 12.7 s.
#[test]
fn constant_velocity_crossing() {
    // q(t) = 4.5 - v (t - 12.65): exactly on the 5% edge (4.5 deg) at 12.65 s.
    let v = 2.0;
    let path: Vec<f64> = (0..=200)
        .map(|k| (4.5 - v * (k as f64 * 0.1 - 12.65)).max(0.0))
        .collect();
    let log = hip_log(&path, 0.0);
    let cfg = MetricsConfig::default();
    assert!(success(&log, &cfg).unwrap());
    assert_abs_diff_eq!(reaching_time(&log, &cfg).unwrap().unwrap(), 12.7, epsilon = 1e-9);
    let k = reach_kinematics(&log, &cfg).unwrap().unwrap();
    let travelled = path[0] - path[127];
    assert_abs_diff_eq!(k.distance, travelled, epsilon = 1e-9);
    assert_abs_diff_eq!(k.velocity, travelled / 12.7, epsilon = 1e-9);
    assert_abs_diff_eq!(k.speed, k.velocity, epsilon = 1e-9);
}

#[test]
fn monotone_thirty_degrees_in_ten_seconds() {
    // 0 -> 30 over 100 ticks, one final jump into the band at t = 10 s.
    let mut path: Vec<f64> = (0..100).map(|k| k as f64 * 0.2).collect();
    path.extend(std::iter::repeat_n(30.0, 31));
    let log = hip_log(&path, 30.0);
    let cfg = MetricsConfig {
        dead_band: 0.01,
        ..MetricsConfig::default()
    };
    let k = reach_kinematics(&log, &cfg).unwrap().unwrap();
    assert_abs_diff_eq!(k.duration, 10.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k.distance, 30.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k.velocity, 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k.speed, 3.0, epsilon = 1e-9);
}

#[test]
fn overshoot_counts_the_way_back() {
    // 0 -> 40 over 8 s, held, then back to the 30 degree target at t = 10 s.
    let mut path: Vec<f64> = (0..=80).map(|k| k as f64 * 0.5).collect();
    path.extend(std::iter::repeat_n(40.0, 19));
    path.extend(std::iter::repeat_n(30.0, 31));
    let log = hip_log(&path, 30.0);
    let cfg = MetricsConfig::default();
    let k = reach_kinematics(&log, &cfg).unwrap().unwrap();
    assert_abs_diff_eq!(k.duration, 10.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k.distance, 50.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k.velocity, 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k.speed, 5.0, epsilon = 1e-9);
}

#[test]
fn plateau_and_noisy_tail() {
    let cfg = MetricsConfig::default();
    // Trunk stuck at 8% of 90 degrees.
    let plateau = hip_log(&vec![7.2; 40], 0.0);
    assert!(!success(&plateau, &cfg).unwrap());
    assert_eq!(reaching_time(&plateau, &cfg).unwrap(), None);
    assert_eq!(reach_kinematics(&plateau, &cfg).unwrap(), None);
    assert_abs_diff_eq!(final_error(&plateau, &cfg).unwrap()[0], 8.0, epsilon = 1e-9);

    let tail = [6.0, 5.5, 4.2, 7.0, 5.1, 6.3];
    let mut path = vec![20.0; 20];
    path.extend(tail.iter().cycle().take(21).map(|p| p / 100.0 * 90.0));
    let log = hip_log(&path, 0.0);
    assert_abs_diff_eq!(final_error(&log, &cfg).unwrap()[0], 4.2, epsilon = 1e-9);
    assert!(success(&log, &cfg).unwrap());
}

#[test]
fn dip_inside_window_is_success() {
    let mut path = vec![9.0; 40];
    path[35] = 3.6;
    let log = hip_log(&path, 0.0);
    assert!(success(&log, &MetricsConfig::default()).unwrap());
    path[35] = 9.0;
    path[5] = 0.0;
    let log = hip_log(&path, 0.0);
    assert!(!success(&log, &MetricsConfig::default()).unwrap());
}

#[test]
fn thirty_of_hundred_moving_ticks_oppose() {
    // Target 0; trunk far away so it stays the guided joint. 70 steps toward, 30 away, 15 idle.
    let mut path = vec![60.0];
    let mut q = 60.0;
    for k in 0..100 {
        q += if k % 10 < 3 { 1.0 } else { -1.0 };
        path.push(q);
    }
    path.extend(std::iter::repeat_n(q, 15));
    let log = hip_log(&path, 0.0);
    let c = confusion_index(&log, &MetricsConfig::default()).unwrap().unwrap();
    assert_abs_diff_eq!(c, 30.0, epsilon = 1e-9);
}

#[test]
fn decrement_ratio_examples() {
    let d = decrement_ratio(&TorqueVector([20.0, 10.0, 5.0, 1.0, 1.0]), &TorqueVector([10.0, 13.678, 5.0, 1.0, 1.0]), 1e-6);
    assert_abs_diff_eq!(d[0].unwrap(), 50.0, epsilon = 1e-9);
    assert_abs_diff_eq!(d[1].unwrap(), -36.78, epsilon = 1e-9);
    assert_abs_diff_eq!(d[2].unwrap(), 0.0, epsilon = 1e-9);
}

#[test]
fn textbook_anova() {
    // Grand mean 4; SS_cond 56, SS_subj 14/3, SS_err 4/3; F = 28 / (2/9) = 126.
    let data = vec![
        vec![1.0, 2.0, 6.0],
        vec![2.0, 4.0, 7.0],
        vec![3.0, 3.0, 8.0],
        vec![2.0, 3.0, 7.0],
    ];
    let r = rm_anova_f(&data).unwrap();
    assert_abs_diff_eq!(r.ss_conditions, 56.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.ss_subjects, 14.0 / 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.ss_error, 4.0 / 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.f, 126.0, epsilon = 1e-9);
    assert_eq!((r.df_conditions, r.df_error), (2.0, 6.0));
    // With 2 numerator degrees of freedom the tail is (d2 / (d2 + 2F))^(d2/2) = (1/43)^3.
    assert_abs_diff_eq!(r.p, (1.0f64 / 43.0).powi(3), epsilon = 1e-12);
}

#[test]
fn two_conditions_give_squared_paired_t() {
    let a = [5.1, 4.8, 6.0, 5.5, 4.9, 5.7];
    let b = [5.9, 5.0, 6.8, 6.1, 5.8, 6.0];
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = mean / (sd / n.sqrt());
    let data: Vec<Vec<f64>> = a.iter().zip(&b).map(|(x, y)| vec![*x, *y]).collect();
    let r = rm_anova_f(&data).unwrap();
    assert_abs_diff_eq!(r.f, t * t, epsilon = 1e-9 * t * t);
}

#[test]
fn questionnaires() {
    assert_eq!(sus_score(&[3; 10]).unwrap(), 50.0);
    assert_eq!(sus_score(&[5, 1, 5, 1, 5, 1, 5, 1, 5, 1]).unwrap(), 100.0);
    assert_eq!(sus_score(&[4, 2, 5, 1, 4, 2, 4, 3, 5, 2]).unwrap(), 80.0);
    assert_eq!(seq_score(7).unwrap(), 7);
}

fn walk_strategy() -> impl Strategy<Value = (Vec<[f64; 3]>, [f64; 3])> {
    let step = (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0);
    (
        proptest::collection::vec(step, 25..120),
        (-10.0f64..60.0, -120.0f64..0.0, -120.0f64..-10.0),
        (0usize..25),
    )
        .prop_map(|(steps, start, settle)| {
            let mut q = [start.0, start.1, start.2];
            let target = [20.0, -45.0, -60.0];
            let mut path = vec![q];
            for s in steps {
                q = [q[0] + s.0, q[1] + s.1, q[2] + s.2];
                path.push(q);
            }
            // Finish with a settled stretch at the target so some logs succeed.
            path.extend(std::iter::repeat_n(target, 21 + settle));
            (path, target)
        })
}

proptest! {
    #[test]
    fn path_is_never_shorter_than_chord((path, target) in walk_strategy()) {
        let log: Vec<_> = path.iter().enumerate().map(|(k, q)| tick(k as u64, *q, target)).collect();
        let cfg = MetricsConfig::default();
        if let Some(k) = reach_kinematics(&log, &cfg).unwrap() {
            let chord: f64 = k.chord.iter().sum();
            prop_assert!(k.distance >= chord - 1e-9);
            prop_assert!(k.speed >= k.velocity - 1e-9);
        }
    }

    #[test]
    fn wider_dead_band_never_loses_success((path, target) in walk_strategy(), cut in 0usize..40) {
        let keep = path.len().saturating_sub(cut).max(21);
        let log: Vec<_> = path[..keep].iter().enumerate().map(|(k, q)| tick(k as u64, *q, target)).collect();
        let tight = MetricsConfig::default();
        let loose = MetricsConfig { dead_band: 0.06, ..tight };
        if success(&log, &tight).unwrap() {
            prop_assert!(success(&log, &loose).unwrap());
        }
    }

    #[test]
    fn decrement_ratio_ignores_units(
        init in proptest::collection::vec(0.5f64..50.0, 5),
        fin in proptest::collection::vec(-50.0f64..50.0, 5),
        scale in 0.001f64..1000.0,
    ) {
        let ti = TorqueVector([init[0], init[1], init[2], init[3], init[4]]);
        let tf = TorqueVector([fin[0], fin[1], fin[2], fin[3], fin[4]]);
        let a = decrement_ratio(&ti, &tf, 1e-9);
        let b = decrement_ratio(&ti.scale(scale), &tf.scale(scale), 1e-9 * scale);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.unwrap() - y.unwrap()).abs() < 1e-9 * x.unwrap().abs().max(1.0));
        }
    }
}
