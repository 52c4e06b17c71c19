use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vibroguide_core::body::{forward_kinematics, Posture, SescParams};
use vibroguide_core::loading::{
    estimate_overloading, overloading_torques_oracle, simulate_plate, simulate_plate_noisy, EstimatorConfig,
    LoadSpec, PlateNoise,
};
use vibroguide_core::{HumanModel64, Joint, Posture64};

fn posture_strategy() -> impl Strategy<Value = Posture64> {
    let m = HumanModel64::default();
    let ranges: Vec<_> = m.limits().iter().map(|l| l.min_deg..=l.max_deg).collect();
    ranges.prop_map(|a| Posture::from_slice(&a).unwrap())
}

fn rel_inf(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn estimator_matches_oracle(p in posture_strategy(), mass in 0.5f64..10.0) {
        let m = HumanModel64::default();
        let load = LoadSpec::new(mass).unwrap();
        let sesc = SescParams::from_model(&m);
        let est = estimate_overloading(&simulate_plate(&m, &p, &load), &sesc, &m, &p, &EstimatorConfig::default())
            .unwrap();
        prop_assert!(est.load_detected);
        let oracle = overloading_torques_oracle(&m, &p, &load);
        prop_assert!(rel_inf(&est.torques.0, &oracle.0) < 1e-9);
        prop_assert!((est.load_mass - mass).abs() < 1e-9 * mass);
    }
}

proptest! {
    #[test]
    fn torques_are_linear_in_mass(p in posture_strategy(), mass in 0.5f64..5.0) {
        let m = HumanModel64::default();
        let sesc = SescParams::from_model(&m);
        let one = LoadSpec::new(mass).unwrap();
        let two = LoadSpec::new(2.0 * mass).unwrap();
        let o1 = overloading_torques_oracle(&m, &p, &one);
        let o2 = overloading_torques_oracle(&m, &p, &two);
        prop_assert!(rel_inf(&o2.0, &o1.scale(2.0).0) < 1e-12);
        let cfg = EstimatorConfig::default();
        let e1 = estimate_overloading(&simulate_plate(&m, &p, &one), &sesc, &m, &p, &cfg).unwrap();
        let e2 = estimate_overloading(&simulate_plate(&m, &p, &two), &sesc, &m, &p, &cfg).unwrap();
        prop_assert!(rel_inf(&e2.torques.0, &e1.torques.scale(2.0).0) < 1e-9);
    }

    #[test]
    fn ankle_torque_grows_with_reach(elbows in proptest::collection::vec(-145.0f64..0.0, 2)) {
        // Upright body, arm held forward; a straighter elbow puts the hand further out.
        let m = HumanModel64::default();
        let load = LoadSpec::new(4.0).unwrap();
        let at = |e: f64| Posture64::zero().with(Joint::Shoulder, -90.0).with(Joint::Elbow, e);
        let (near, far) = if elbows[0] < elbows[1] { (elbows[0], elbows[1]) } else { (elbows[1], elbows[0]) };
        prop_assume!(far - near > 1e-6);
        let xn = forward_kinematics(&m, &at(near)).hand.x;
        let xf = forward_kinematics(&m, &at(far)).hand.x;
        prop_assert!(xf > xn);
        let tn = overloading_torques_oracle(&m, &at(near), &load).get(Joint::Ankle).abs();
        let tf = overloading_torques_oracle(&m, &at(far), &load).get(Joint::Ankle).abs();
        prop_assert!(tf > tn);
    }
}

#[test]
fn light_load_is_not_detected() {
    let m = HumanModel64::default();
    let p = Posture64::zero();
    let sesc = SescParams::from_model(&m);
    let est = estimate_overloading(
        &simulate_plate(&m, &p, &LoadSpec::new(0.1).unwrap()),
        &sesc,
        &m,
        &p,
        &EstimatorConfig::default(),
    )
    .unwrap();
    assert!(!est.load_detected);
    assert_eq!(est.torques.0, [0.0; 5]);
}

/// Shoulder at -90 and the elbow bent so the hand sits 0.5 m ahead of the hip.
fn reach_half_metre(m: &HumanModel64) -> Posture64 {
    let lu = m.segment(Joint::Shoulder).length;
    let lf = m.segment(Joint::Elbow).length;
    let e = -((0.5 - lu) / lf).acos().to_degrees();
    Posture64::zero().with(Joint::Shoulder, -90.0).with(Joint::Elbow, e)
}

#[test]
fn cop_noise_error_follows_lever_arm() {
    // With only CoP noise the load abscissa error is δ(M+m)/m, so the torque error
    // relative to the oracle is δ(M+m)/(m·lever) and its median is 0.6745 of that at δ = σ.
    let m = HumanModel64::default();
    let p = reach_half_metre(&m);
    let sesc = SescParams::from_model(&m);
    let mass = 4.0;
    let load = LoadSpec::new(mass).unwrap();
    let sigma = 0.002;
    let noise = PlateNoise {
        cop_sigma: sigma,
        grf_sigma: 0.0,
    };
    let oracle = overloading_torques_oracle(&m, &p, &load);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut per_joint: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for _ in 0..1000 {
        let plate = simulate_plate_noisy(&m, &p, &load, &noise, &mut rng);
        let est = estimate_overloading(&plate, &sesc, &m, &p, &EstimatorConfig::default()).unwrap();
        for j in 0..5 {
            per_joint[j].push(((est.torques.0[j] - oracle.0[j]) / oracle.0[j]).abs());
        }
    }
    let kp = forward_kinematics(&m, &p);
    let big_m = m.total_mass();
    for j in Joint::ALL {
        let v = &mut per_joint[j.index()];
        v.sort_by(f64::total_cmp);
        let median = v[v.len() / 2];
        let lever = (kp.hand.x - kp.joint(j).x).abs();
        let predicted = 0.6745 * sigma * (big_m + mass) / (mass * lever);
        assert!((median / predicted - 1.0).abs() < 0.1, "{j}: median {median}, predicted {predicted}");
        if lever >= 0.5 - 1e-9 {
            assert!(predicted < 0.05, "{j}: predicted {predicted}");
        }
    }
}
