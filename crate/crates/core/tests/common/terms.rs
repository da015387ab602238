use std::f64::consts::E;

use imfkit::rewards::*;

pub type Tweak = fn(&mut TrajectorySample, &mut RewardWeights);

/// `(term, [(tweak, expected raw value); 3])`
pub fn cases() -> Vec<(&'static str, [(Tweak, f64); 3])> {
    vec![
        (LINEAR_VELOCITY, [
            (|_, _| {}, 1.0),
            (|s, _| s.measured_planar_velocity = [0.75, 0.0], 1.0 / E),
            (|s, _| s.measured_planar_velocity = [0.6, 0.1], (-0.32f64).exp()),
        ]),
        (ANGULAR_VELOCITY, [
            (|_, _| {}, 1.0),
            (|s, _| s.measured_yaw_rate = -0.05, 1.0 / E),
            (|s, _| s.measured_yaw_rate = 0.7, (-4.0f64).exp()),
        ]),
        (VERTICAL_VELOCITY, [
            (|s, _| s.measured_vertical_velocity = 0.5, 0.25),
            (|_, _| {}, 0.0),
            (|s, _| s.measured_vertical_velocity = -1.5, 2.25),
        ]),
        (ROLL_PITCH_RATE, [
            (|s, _| s.measured_rollpitch_rates = [0.3, 0.4], 0.25),
            (|_, _| {}, 0.0),
            (|s, _| s.measured_rollpitch_rates = [-1.0, 2.0], 5.0),
        ]),
        (ORIENTATION, [
            (|_, _| {}, 0.0),
            (|s, _| s.gravity_in_body = [0.6, 0.0, -0.8], 0.6),
            (|s, _| s.gravity_in_body = [0.0, 1.0, 0.0], 1.0),
        ]),
        (HEIGHT, [
            (|_, _| {}, 0.0),
            (|s, _| s.base_height = 0.5, 0.01),
            (|_, w| w.desired_height = Some(1.0), 0.16),
        ]),
        (TORQUE, [
            (|s, _| s.joint_torques = vec![3.0, 4.0, 0.0, 0.0], 5.0),
            (|_, _| {}, 0.0),
            (|s, _| s.joint_torques = vec![1.0, -1.0, 1.0, -1.0], 2.0),
        ]),
        (ACCELERATION, [
            (|s, _| s.joint_accelerations = vec![0.0, 0.0, 0.0, 12.0], 12.0),
            (|s, _| s.joint_accelerations = vec![2.0, -2.0, 2.0, -2.0], 4.0),
            (|_, _| {}, 0.0),
        ]),
        (POSITION_LIMITS, [
            (|s, _| s.state.joint_positions = vec![1.7, 0.0, 0.0, -2.6], 0.3),
            (|s, _| s.state.joint_positions = vec![1.5, -2.5, -1.5, 2.5], 0.0),
            (|s, _| s.state.joint_positions = vec![-2.0, 0.0, 0.0, 3.0], 1.0),
        ]),
        (ACTION_SMOOTHNESS, [
            (|s, _| s.action = vec![1.0, 1.0, 0.0, 0.0], 2f64.sqrt()),
            (|s, _| {
                s.action = vec![0.2; 4];
                s.prev_action = vec![0.2; 4];
            }, 0.0),
            (|s, _| {
                s.action = vec![0.3, 0.0, 0.0, 0.0];
                s.prev_action = vec![0.0, 0.4, 0.0, 0.0];
            }, 0.5),
        ]),
        (LIMB_CONTACT, [
            (|_, _| {}, 0.0),
            (|s, _| s.undesired_contact = true, 1.0),
            (|s, _| {
                s.undesired_contact = true;
                s.foot_contact = vec![true, true];
            }, 1.0),
        ]),
        (FOOT_AIR_TIME, [
            (|s, _| {
                s.first_contact = vec![true, false];
                s.foot_air_time = vec![0.7, 0.9];
            }, 0.2),
            (|s, _| {
                s.first_contact = vec![true, true];
                s.foot_air_time = vec![0.7, 0.3];
            }, 0.0),
            (|s, _| s.foot_air_time = vec![2.0, 2.0], 0.0),
        ]),
        (STAND_STILL, [
            (|s, _| s.state.joint_positions = vec![0.1, -0.2, 0.0, 0.0], 0.0),
            (|s, _| {
                s.command = [0.05, 0.0, 1.0];
                s.state.joint_positions = vec![0.1, -0.2, 0.0, 0.0];
            }, 0.3),
            (|s, _| s.command = [0.0, 0.0, 0.0], 0.0),
        ]),
    ]
}
