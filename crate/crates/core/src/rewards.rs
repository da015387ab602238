//! Per-timestep reward terms: adversarial style shaping, velocity-tracking
//! task reward, the hand-crafted term table, and the two combined structures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RobotModel, RobotState};

/// One timestep of a locomotion log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySample {
    /// s
    pub time: f64,
    pub state: RobotState,
    /// Body-frame planar velocity `v̂_xy` (m/s).
    pub measured_planar_velocity: [f64; 2],
    /// `ω̂_z` (rad/s).
    pub measured_yaw_rate: f64,
    /// `v̂_z` (m/s).
    pub measured_vertical_velocity: f64,
    /// `[roll rate, pitch rate]` (rad/s).
    pub measured_rollpitch_rates: [f64; 2],
    /// Unit gravity direction in the body frame.
    pub gravity_in_body: [f64; 3],
    /// m
    pub base_height: f64,
    /// `[v_x, v_y, ω_z]`
    pub command: [f64; 3],
    /// Actuated joints only (N·m).
    pub joint_torques: Vec<f64>,
    /// May be omitted from a log and reconstructed by central differences.
    #[serde(default)]
    pub joint_accelerations: Vec<f64>,
    pub action: Vec<f64>,
    pub prev_action: Vec<f64>,
    pub foot_contact: Vec<bool>,
    pub undesired_contact: bool,
    /// Seconds since last liftoff, per contact frame.
    pub foot_air_time: Vec<f64>,
    pub first_contact: Vec<bool>,
}

impl TrajectorySample {
    pub fn check_dimensions(&self, model: &RobotModel) -> Result<()> {
        let (n, n_act, feet) = (model.n(), model.n_act(), model.contact_frames().len());
        let checks = [
            ("state.joint_positions", n, self.state.joint_positions.len()),
            ("state.joint_velocities", n, self.state.joint_velocities.len()),
            ("joint_torques", n_act, self.joint_torques.len()),
            ("joint_accelerations", n, self.joint_accelerations.len()),
            ("action", n_act, self.action.len()),
            ("prev_action", n_act, self.prev_action.len()),
            ("foot_contact", feet, self.foot_contact.len()),
            ("foot_air_time", feet, self.foot_air_time.len()),
            ("first_contact", feet, self.first_contact.len()),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected,
                    actual,
                });
            }
        }
        let g = self.gravity_in_body;
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "gravity_in_body norm {norm} is not unit at t = {}",
                self.time
            )));
        }
        Ok(())
    }

    /// Actuated joint velocities, selection-matrix order.
    pub fn actuated_velocities(&self, model: &RobotModel) -> Vec<f64> {
        model
            .actuated_indices()
            .into_iter()
            .map(|j| self.state.joint_velocities[j])
            .collect()
    }
}

pub const LINEAR_VELOCITY: &str = "linear_velocity";
pub const ANGULAR_VELOCITY: &str = "angular_velocity";
pub const VERTICAL_VELOCITY: &str = "vertical_velocity";
pub const ROLL_PITCH_RATE: &str = "roll_pitch_rate";
pub const ORIENTATION: &str = "orientation";
pub const HEIGHT: &str = "height";
pub const TORQUE: &str = "torque";
pub const ACCELERATION: &str = "acceleration";
pub const POSITION_LIMITS: &str = "position_limits";
pub const ACTION_SMOOTHNESS: &str = "action_smoothness";
pub const LIMB_CONTACT: &str = "limb_contact";
pub const FOOT_AIR_TIME: &str = "foot_air_time";
pub const STAND_STILL: &str = "stand_still";

/// Hand-crafted terms in table order with their default weights.
pub const HANDCRAFTED_TERMS: [(&str, f64); 13] = [
    (LINEAR_VELOCITY, 1.5),
    (ANGULAR_VELOCITY, 0.75),
    (VERTICAL_VELOCITY, -2.0),
    (ROLL_PITCH_RATE, -0.05),
    (ORIENTATION, -0.5),
    (HEIGHT, -2.0),
    (TORQUE, -1e-5),
    (ACCELERATION, -1e-7),
    (POSITION_LIMITS, -2.0),
    (ACTION_SMOOTHNESS, -0.01),
    (LIMB_CONTACT, -1.0),
    (FOOT_AIR_TIME, 0.01),
    (STAND_STILL, -0.5),
];

fn default_handcrafted() -> BTreeMap<String, f64> {
    HANDCRAFTED_TERMS
        .iter()
        .map(|(k, w)| (k.to_string(), *w))
        .collect()
}

/// Reward weights and shaping constants.
///
/// `Default` carries the AMP-structure weights; see [`RewardWeights::handcrafted_flat`]
/// and [`RewardWeights::handcrafted_rough`] for the hand-crafted presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_task: f64,
    pub w_style: f64,
    pub w_imf: f64,
    pub w_v: f64,
    pub w_omega: f64,
    /// Term name to weight; absent terms use the table default.
    pub handcrafted: BTreeMap<String, f64>,
    /// Tracking kernel width σ.
    pub sigma: f64,
    /// Height target; `None` falls back to the model's nominal base height.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub desired_height: Option<f64>,
    /// s
    pub air_time_threshold: f64,
    /// m/s, applied to the commanded planar speed.
    pub standstill_command_threshold: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_task: 1.0,
            w_style: 2.0,
            w_imf: 10.0,
            w_v: 2.5,
            w_omega: 1.5,
            handcrafted: default_handcrafted(),
            sigma: 0.25,
            desired_height: None,
            air_time_threshold: 0.5,
            standstill_command_threshold: 0.1,
        }
    }
}

impl RewardWeights {
    pub fn amp() -> Self {
        Self::default()
    }

    pub fn handcrafted_flat() -> Self {
        Self {
            w_imf: 0.15,
            ..Self::default()
        }
    }

    pub fn handcrafted_rough() -> Self {
        Self {
            w_imf: 1.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.air_time_threshold >= 0.0) {
            return Err(Error::Domain(format!(
                "air_time_threshold must be non-negative, got {}",
                self.air_time_threshold
            )));
        }
        for name in self.handcrafted.keys() {
            if !HANDCRAFTED_TERMS.iter().any(|(t, _)| t == name) {
                return Err(Error::Domain(format!("unknown hand-crafted term `{name}`")));
            }
        }
        Ok(())
    }

    pub fn term_weight(&self, term: &str) -> f64 {
        self.handcrafted.get(term).copied().unwrap_or_else(|| {
            HANDCRAFTED_TERMS
                .iter()
                .find(|(t, _)| *t == term)
                .map(|(_, w)| *w)
                .unwrap_or(0.0)
        })
    }

    /// Every weight multiplied by `factor`; shaping constants untouched.
    pub fn scaled(&self, factor: f64) -> Self {
        let handcrafted = HANDCRAFTED_TERMS
            .iter()
            .map(|(t, _)| (t.to_string(), self.term_weight(t) * factor))
            .collect();
        Self {
            w_task: self.w_task * factor,
            w_style: self.w_style * factor,
            w_imf: self.w_imf * factor,
            w_v: self.w_v * factor,
            w_omega: self.w_omega * factor,
            handcrafted,
            ..self.clone()
        }
    }
}

/// `max[0, 1 − ¼(d − 1)²]`.
pub fn style_reward(d_value: f64) -> f64 {
    (1.0 - 0.25 * (d_value - 1.0).powi(2)).max(0.0)
}

/// Velocity tracking with an exponential of the (unsquared) error norm.
pub fn task_reward(sample: &TrajectorySample, weights: &RewardWeights) -> f64 {
    let ev = [
        sample.measured_planar_velocity[0] - sample.command[0],
        sample.measured_planar_velocity[1] - sample.command[1],
    ];
    let lin_err = ev[0].hypot(ev[1]);
    let yaw_err = (sample.measured_yaw_rate - sample.command[2]).abs();
    weights.w_v * (-lin_err).exp() + weights.w_omega * (-yaw_err).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermValue {
    pub raw: f64,
    pub weighted: f64,
}

fn l2(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Linear excess beyond the joint limits; zero inside.
pub fn limit_penalty(q: f64, lower: f64, upper: f64) -> f64 {
    (q - upper).max(0.0) + (lower - q).max(0.0)
}

/// Evaluates every hand-crafted term for one sample.
pub fn handcrafted_terms(
    sample: &TrajectorySample,
    model: &RobotModel,
    weights: &RewardWeights,
) -> Result<BTreeMap<String, TermValue>> {
    sample.check_dimensions(model)?;
    let sigma2 = weights.sigma * weights.sigma;
    let q = &sample.state.joint_positions;

    let lin_err2 = (0..2)
        .map(|k| (sample.measured_planar_velocity[k] - sample.command[k]).powi(2))
        .sum::<f64>();
    let yaw_err2 = (sample.measured_yaw_rate - sample.command[2]).powi(2);
    let desired_height = weights
        .desired_height
        .or(model.nominal_base_height())
        .ok_or_else(|| {
            Error::Domain("no desired_height configured and model has no nominal_base_height".into())
        })?;
    let position_limits = model
        .joints()
        .iter()
        .zip(q)
        .map(|(j, &qi)| limit_penalty(qi, j.lower(), j.upper()))
        .sum();
    let smoothness = l2(sample.action.iter().zip(&sample.prev_action).map(|(a, b)| a - b));
    let air_time = sample
        .foot_air_time
        .iter()
        .zip(&sample.first_contact)
        .filter(|(_, first)| **first)
        .map(|(t, _)| t - weights.air_time_threshold)
        .sum();
    let planar_command = sample.command[0].hypot(sample.command[1]);
    let stand_still = if planar_command < weights.standstill_command_threshold {
        model
            .joints()
            .iter()
            .zip(q)
            .map(|(j, &qi)| (qi - j.default_position).abs())
            .sum()
    } else {
        0.0
    };

    let raw: [(&str, f64); 13] = [
        (LINEAR_VELOCITY, (-lin_err2 / sigma2).exp()),
        (ANGULAR_VELOCITY, (-yaw_err2 / sigma2).exp()),
        (VERTICAL_VELOCITY, sample.measured_vertical_velocity.powi(2)),
        (ROLL_PITCH_RATE, l2(sample.measured_rollpitch_rates).powi(2)),
        (ORIENTATION, sample.gravity_in_body[0].hypot(sample.gravity_in_body[1])),
        (HEIGHT, (sample.base_height - desired_height).powi(2)),
        (TORQUE, l2(sample.joint_torques.iter().copied())),
        (ACCELERATION, l2(sample.joint_accelerations.iter().copied())),
        (POSITION_LIMITS, position_limits),
        (ACTION_SMOOTHNESS, smoothness),
        (LIMB_CONTACT, if sample.undesired_contact { 1.0 } else { 0.0 }),
        (FOOT_AIR_TIME, air_time),
        (STAND_STILL, stand_still),
    ];
    Ok(raw
        .into_iter()
        .map(|(name, raw)| {
            let weighted = raw * weights.term_weight(name);
            (name.to_string(), TermValue { raw, weighted })
        })
        .collect())
}

/// `w_task·r_task + w_style·r_style + w_imf·r_imf`.
pub fn combined_amp_reward(task: f64, style: f64, imf: f64, weights: &RewardWeights) -> f64 {
    weights.w_task * task + weights.w_style * style + weights.w_imf * imf
}

/// `w_imf·r_imf + Σ wᵢ rᵢ` over already-weighted terms.
pub fn combined_handcrafted_reward(
    terms: &BTreeMap<String, TermValue>,
    imf: f64,
    weights: &RewardWeights,
) -> f64 {
    weights.w_imf * imf + terms.values().map(|t| t.weighted).sum::<f64>()
}
