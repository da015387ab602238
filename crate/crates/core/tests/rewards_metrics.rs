mod common;

use std::f64::consts::E;

use common::quiet_sample;
use common::terms::cases;
use imfkit::metrics::{
    cost_of_transport, mechanical_power, metrics_report, velocity_rmse, RmseChannel,
};
use imfkit::rewards::*;
use imfkit::{Error, RobotModel};
use proptest::prelude::*;

fn biped() -> RobotModel {
    common::bundled("planar_biped")
}

#[test]
fn every_table_term_on_three_samples() {
    let model = biped();
    let table = cases();
    assert_eq!(table.len(), HANDCRAFTED_TERMS.len());
    for (term, samples) in table {
        for (k, (tweak, expected)) in samples.into_iter().enumerate() {
            let mut s = quiet_sample(&model, 0.0);
            let mut w = RewardWeights::handcrafted_flat();
            tweak(&mut s, &mut w);
            let terms = handcrafted_terms(&s, &model, &w).unwrap();
            let got = terms[term];
            assert!((got.raw - expected).abs() <= 1e-12, "{term} sample {k}: {} vs {expected}", got.raw);
            let weight = HANDCRAFTED_TERMS.iter().find(|(t, _)| *t == term).unwrap().1;
            assert!((got.weighted - weight * expected).abs() <= 1e-12, "{term} sample {k} weighted");
        }
    }
}

#[test]
fn documented_term_examples() {
    let model = biped();
    let w = RewardWeights::handcrafted_flat();

    let mut s = quiet_sample(&model, 0.0);
    s.measured_vertical_velocity = 0.5;
    let t = handcrafted_terms(&s, &model, &w).unwrap()[VERTICAL_VELOCITY];
    assert_eq!((t.raw, t.weighted), (0.25, -0.5));

    let s = quiet_sample(&model, 0.0);
    let terms = handcrafted_terms(&s, &model, &w).unwrap();
    let total: f64 = terms.values().map(|t| t.weighted).sum();
    assert!((total - 2.25).abs() <= 1e-12);
    for (name, t) in &terms {
        if name != LINEAR_VELOCITY && name != ANGULAR_VELOCITY {
            assert_eq!(t.weighted, 0.0, "{name}");
        }
    }

    let mut s = quiet_sample(&model, 0.0);
    s.first_contact = vec![true, false];
    s.foot_air_time = vec![0.7, 0.0];
    let t = handcrafted_terms(&s, &model, &w).unwrap()[FOOT_AIR_TIME];
    assert!((t.weighted - 0.002).abs() <= 1e-15);
}

#[test]
fn task_reward_examples() {
    let model = biped();
    let s = quiet_sample(&model, 0.0);
    assert!((task_reward(&s, &RewardWeights::default()) - 4.0).abs() <= 1e-12);
    let mut s = quiet_sample(&model, 0.0);
    s.measured_planar_velocity = [0.5 + 0.6, 0.8];
    s.measured_yaw_rate = 1.2;
    let mut w = RewardWeights::default();
    w.w_v = 1.0;
    w.w_omega = 1.0;
    assert!((task_reward(&s, &w) - 2.0 / E).abs() <= 1e-12);
}

#[test]
fn missing_height_target_is_an_error() {
    let model = common::bundled("planar_chain");
    let mut s = quiet_sample(&model, 0.0);
    s.foot_contact = vec![false];
    let err = handcrafted_terms(&s, &model, &RewardWeights::default()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn wrong_dimensions_rejected() {
    let model = biped();
    let mut s = quiet_sample(&model, 0.0);
    s.joint_torques.pop();
    assert!(matches!(
        handcrafted_terms(&s, &model, &RewardWeights::default()),
        Err(Error::Dimension { .. })
    ));
    let mut s = quiet_sample(&model, 0.0);
    s.gravity_in_body = [0.0, 0.0, -0.9];
    assert!(handcrafted_terms(&s, &model, &RewardWeights::default()).is_err());
}

fn constant_log(model: &RobotModel, power: f64, speed: f64, times: &[f64]) -> Vec<TrajectorySample> {
    times
        .iter()
        .map(|&t| {
            let mut s = quiet_sample(model, t);
            s.measured_planar_velocity = [speed, 0.0];
            s.joint_torques = vec![power, 0.0, 0.0, 0.0];
            s.state.joint_velocities = vec![1.0, 0.0, 0.0, 0.0];
            s
        })
        .collect()
}

#[test]
fn constant_power_cost_of_transport() {
    let model = biped();
    let log = constant_log(&model, 10.0, 1.0, &[0.0, 0.5, 1.0, 2.0, 3.5]);
    let cot = cost_of_transport(&log, &model, 10.0, 9.81).unwrap();
    assert!((cot - 10.0 / (10.0 * 9.81)).abs() <= 1e-6);
    assert!((cot - 0.101937).abs() <= 1e-6);
    let fast = constant_log(&model, 10.0, 2.0, &[0.0, 0.5, 1.0, 2.0, 3.5]);
    assert_eq!(cost_of_transport(&fast, &model, 10.0, 9.81).unwrap(), cot / 2.0);
    // uniform time reparametrization
    let slow = constant_log(&model, 10.0, 1.0, &[0.0, 5.0, 10.0, 20.0, 35.0]);
    assert!((cost_of_transport(&slow, &model, 10.0, 9.81).unwrap() - cot).abs() <= 1e-15);
    let report = metrics_report(&log, &model, 10.0, 9.81).unwrap();
    assert_eq!(report.cot, cot);
    assert!((report.distance - 3.5).abs() <= 1e-12);
    assert!((report.duration - 3.5).abs() <= 1e-12);
}

#[test]
fn stationary_log_has_undefined_cot() {
    let model = biped();
    let log = constant_log(&model, 10.0, 0.0, &[0.0, 1.0]);
    assert!(matches!(
        cost_of_transport(&log, &model, 10.0, 9.81),
        Err(Error::UndefinedCot { .. })
    ));
    assert!(matches!(metrics_report(&log, &model, 10.0, 9.81), Err(Error::UndefinedCot { .. })));
    assert!(cost_of_transport(&log[..1], &model, 10.0, 9.81).is_err());
}

#[test]
fn rmse_examples() {
    let model = biped();
    let mut log = vec![quiet_sample(&model, 0.0), quiet_sample(&model, 1.0)];
    log[0].measured_yaw_rate = 0.2 + 3.0;
    log[1].measured_yaw_rate = 0.2 + 4.0;
    let rmse = velocity_rmse(&log, RmseChannel::YawRate).unwrap();
    assert!((rmse - (12.5f64).sqrt()).abs() <= 1e-9);
    assert!((rmse - 3.5355).abs() <= 1e-4);
    for s in &mut log {
        s.measured_rollpitch_rates = [0.5, -0.5];
    }
    assert!((velocity_rmse(&log, RmseChannel::PitchRate).unwrap() - 0.5).abs() <= 1e-15);
    assert!((velocity_rmse(&log, RmseChannel::RollRate).unwrap() - 0.5).abs() <= 1e-15);
    assert_eq!(velocity_rmse(&log, RmseChannel::PlanarSpeed).unwrap(), 0.0);
    assert!(velocity_rmse(&[], RmseChannel::YawRate).is_err());
}

proptest! {
    #[test]
    fn style_reward_range(d in -1e3f64..1e3) {
        let r = style_reward(d);
        prop_assert!((0.0..=1.0).contains(&r));
        if d <= -1.0 || d >= 3.0 {
            prop_assert_eq!(r, 0.0);
        }
        if d != 1.0 {
            prop_assert!(r < 1.0);
        }
    }

    #[test]
    fn task_reward_decreases_with_error(e1 in 0.0f64..5.0, e2 in 0.0f64..5.0, yaw in 0.0f64..5.0) {
        prop_assume!(e1 < e2);
        let model = biped();
        let w = RewardWeights::default();
        let mut a = quiet_sample(&model, 0.0);
        a.measured_planar_velocity[0] += e1;
        a.measured_yaw_rate += yaw;
        let mut b = a.clone();
        b.measured_planar_velocity[0] = 0.5 + e2;
        prop_assert!(task_reward(&a, &w) > task_reward(&b, &w));
        prop_assert!(task_reward(&a, &w) <= w.w_v + w.w_omega);
    }

    #[test]
    fn term_signs_after_weighting(
        vz in -3.0f64..3.0,
        rates in prop::array::uniform2(-3.0f64..3.0),
        torques in prop::array::uniform4(-50.0f64..50.0),
        q in prop::array::uniform4(-4.0f64..4.0),
        h in 0.0f64..1.0,
        v in prop::array::uniform2(-2.0f64..2.0),
        undesired in any::<bool>(),
    ) {
        let model = biped();
        let mut s = quiet_sample(&model, 0.0);
        s.measured_vertical_velocity = vz;
        s.measured_rollpitch_rates = rates;
        s.joint_torques = torques.to_vec();
        s.state.joint_positions = q.to_vec();
        s.base_height = h;
        s.measured_planar_velocity = v;
        s.undesired_contact = undesired;
        let terms = handcrafted_terms(&s, &model, &RewardWeights::default()).unwrap();
        for (name, t) in &terms {
            match name.as_str() {
                LINEAR_VELOCITY | ANGULAR_VELOCITY => prop_assert!(t.weighted >= 0.0),
                FOOT_AIR_TIME => {}
                _ => prop_assert!(t.weighted <= 0.0, "{} = {}", name, t.weighted),
            }
        }
    }

    #[test]
    fn combined_rewards_are_linear_in_weights(
        task in -5.0f64..5.0, style in 0.0f64..1.0, imf in 0.0f64..20.0, vz in -2.0f64..2.0,
    ) {
        let w = RewardWeights::default();
        let w2 = w.scaled(2.0);
        prop_assert_eq!(combined_amp_reward(task, style, imf, &w2), 2.0 * combined_amp_reward(task, style, imf, &w));
        let model = biped();
        let mut s = quiet_sample(&model, 0.0);
        s.measured_vertical_velocity = vz;
        let t1 = handcrafted_terms(&s, &model, &w).unwrap();
        let t2 = handcrafted_terms(&s, &model, &w2).unwrap();
        prop_assert_eq!(combined_handcrafted_reward(&t2, imf, &w2), 2.0 * combined_handcrafted_reward(&t1, imf, &w));
    }

    #[test]
    fn limit_penalty_continuous_at_bounds(eps in 0.0f64..1e-3) {
        prop_assert!(limit_penalty(1.5 + eps, -1.5, 1.5) <= eps + 1e-15);
        prop_assert_eq!(limit_penalty(1.5 - eps, -1.5, 1.5), 0.0);
        prop_assert!(limit_penalty(-1.5 - eps, -1.5, 1.5) <= eps + 1e-15);
    }

    #[test]
    fn power_is_bilinear(t in prop::array::uniform3(-10.0f64..10.0), v in prop::array::uniform3(-10.0f64..10.0), k in -3.0f64..3.0) {
        let p = mechanical_power(&t, &v).unwrap();
        prop_assert!(p.rectified >= p.signed.abs() - 1e-12);
        let tk: Vec<f64> = t.iter().map(|x| x * k).collect();
        let pk = mechanical_power(&tk, &v).unwrap();
        prop_assert!((pk.signed - k * p.signed).abs() <= 1e-9);
    }

    #[test]
    fn rmse_ignores_order(errors in prop::collection::vec(-5.0f64..5.0, 1..20), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let model = biped();
        let log: Vec<_> = errors
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut s = quiet_sample(&model, i as f64);
                s.measured_yaw_rate = s.command[2] + e;
                s
            })
            .collect();
        let mut shuffled = log.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = velocity_rmse(&log, RmseChannel::YawRate).unwrap();
        let b = velocity_rmse(&shuffled, RmseChannel::YawRate).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}
