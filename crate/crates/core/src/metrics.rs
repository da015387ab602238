//! Trajectory-level evaluation: mechanical power, cost of transport and
//! velocity-tracking RMSE.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RobotModel;
use crate::rewards::TrajectorySample;

/// Mean planar speed below which CoT is undefined (m/s).
pub const MIN_COT_SPEED: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Power {
    /// `Σ τᵢ q̇ᵢ`
    pub signed: f64,
    /// `Σ |τᵢ q̇ᵢ|`
    pub rectified: f64,
}

pub fn mechanical_power(torques: &[f64], velocities: &[f64]) -> Result<Power> {
    if torques.len() != velocities.len() {
        return Err(Error::Dimension {
            what: "actuated joint velocities".into(),
            expected: torques.len(),
            actual: velocities.len(),
        });
    }
    let (signed, rectified) = torques
        .iter()
        .zip(velocities)
        .map(|(t, v)| t * v)
        .fold((0.0, 0.0), |(s, r), p| (s + p, r + p.abs()));
    Ok(Power { signed, rectified })
}

/// Power of one sample over the model's actuated joints.
pub fn sample_power(sample: &TrajectorySample, model: &RobotModel) -> Result<Power> {
    if sample.state.joint_velocities.len() != model.n() {
        return Err(Error::Dimension {
            what: "state.joint_velocities".into(),
            expected: model.n(),
            actual: sample.state.joint_velocities.len(),
        });
    }
    mechanical_power(&sample.joint_torques, &sample.actuated_velocities(model))
}

fn planar_speed(sample: &TrajectorySample) -> f64 {
    let [vx, vy] = sample.measured_planar_velocity;
    vx.hypot(vy)
}

/// Trapezoidal time average of `f` over the samples.
fn time_average(samples: &[TrajectorySample], values: &[f64]) -> Result<(f64, f64)> {
    let mut integral = 0.0;
    for (w, v) in samples.windows(2).zip(values.windows(2)) {
        let dt = w[1].time - w[0].time;
        if !(dt > 0.0) {
            return Err(Error::Domain(format!(
                "timestamps must be strictly increasing (t = {} then {})",
                w[0].time, w[1].time
            )));
        }
        integral += 0.5 * dt * (v[0] + v[1]);
    }
    let duration = samples[samples.len() - 1].time - samples[0].time;
    Ok((integral / duration, integral))
}

fn check_cot_inputs(trajectory: &[TrajectorySample], robot_mass: f64, g: f64) -> Result<()> {
    if trajectory.len() < 2 {
        return Err(Error::Precondition(format!(
            "cost of transport needs at least 2 samples, got {}",
            trajectory.len()
        )));
    }
    if !(robot_mass > 0.0) || !(g > 0.0) {
        return Err(Error::Precondition("robot mass and gravity must be positive".into()));
    }
    Ok(())
}

struct CotParts {
    mean_rectified: f64,
    mean_signed: f64,
    peak_rectified: f64,
    mean_speed: f64,
    distance: f64,
    duration: f64,
}

fn cot_parts(trajectory: &[TrajectorySample], model: &RobotModel) -> Result<CotParts> {
    let powers = trajectory
        .iter()
        .map(|s| sample_power(s, model))
        .collect::<Result<Vec<_>>>()?;
    let rectified: Vec<f64> = powers.iter().map(|p| p.rectified).collect();
    let signed: Vec<f64> = powers.iter().map(|p| p.signed).collect();
    let speeds: Vec<f64> = trajectory.iter().map(planar_speed).collect();
    let (mean_rectified, _) = time_average(trajectory, &rectified)?;
    let (mean_signed, _) = time_average(trajectory, &signed)?;
    let (mean_speed, distance) = time_average(trajectory, &speeds)?;
    Ok(CotParts {
        mean_rectified,
        mean_signed,
        peak_rectified: rectified.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_speed,
        distance,
        duration: trajectory[trajectory.len() - 1].time - trajectory[0].time,
    })
}

/// Time-averaged rectified power over `m · g · mean planar speed`.
pub fn cost_of_transport(
    trajectory: &[TrajectorySample],
    model: &RobotModel,
    robot_mass: f64,
    g: f64,
) -> Result<f64> {
    check_cot_inputs(trajectory, robot_mass, g)?;
    let parts = cot_parts(trajectory, model)?;
    if parts.mean_speed < MIN_COT_SPEED {
        return Err(Error::UndefinedCot {
            speed: parts.mean_speed,
        });
    }
    Ok(parts.mean_rectified / (robot_mass * g * parts.mean_speed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RmseChannel {
    PitchRate,
    RollRate,
    YawRate,
    PlanarSpeed,
}

impl RmseChannel {
    pub const ALL: [RmseChannel; 4] = [
        RmseChannel::PitchRate,
        RmseChannel::RollRate,
        RmseChannel::YawRate,
        RmseChannel::PlanarSpeed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RmseChannel::PitchRate => "pitch-rate",
            RmseChannel::RollRate => "roll-rate",
            RmseChannel::YawRate => "yaw-rate",
            RmseChannel::PlanarSpeed => "planar-speed",
        }
    }

    /// Measured minus commanded. Pitch and roll track a zero rate.
    fn error(self, s: &TrajectorySample) -> f64 {
        match self {
            RmseChannel::PitchRate => s.measured_rollpitch_rates[1],
            RmseChannel::RollRate => s.measured_rollpitch_rates[0],
            RmseChannel::YawRate => s.measured_yaw_rate - s.command[2],
            RmseChannel::PlanarSpeed => planar_speed(s) - s.command[0].hypot(s.command[1]),
        }
    }
}

impl FromStr for RmseChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown RMSE channel `{s}`")))
    }
}

pub fn velocity_rmse(trajectory: &[TrajectorySample], channel: RmseChannel) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::Precondition("RMSE needs at least one sample".into()));
    }
    let sum: f64 = trajectory.iter().map(|s| channel.error(s).powi(2)).sum();
    Ok((sum / trajectory.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
    pub planar_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Time-averaged rectified power (W).
    pub mean_mechanical_power: f64,
    pub mean_signed_mechanical_power: f64,
    pub peak_mechanical_power: f64,
    /// Cost of transport from rectified power.
    pub cot: f64,
    /// Same with signed (regenerative) power, for transparency.
    pub cot_signed: f64,
    pub rmse: RmseReport,
    pub duration: f64,
    pub distance: f64,
    pub mean_planar_speed: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "mean_mechanical_power,mean_signed_mechanical_power,peak_mechanical_power,cot,cot_signed,rmse_pitch,rmse_roll,rmse_yaw,rmse_planar_speed,duration,distance,mean_planar_speed";

    pub fn csv_row(&self, fmt: impl Fn(f64) -> String) -> String {
        [
            fmt(self.mean_mechanical_power),
            fmt(self.mean_signed_mechanical_power),
            fmt(self.peak_mechanical_power),
            fmt(self.cot),
            fmt(self.cot_signed),
            fmt(self.rmse.pitch),
            fmt(self.rmse.roll),
            fmt(self.rmse.yaw),
            fmt(self.rmse.planar_speed),
            fmt(self.duration),
            fmt(self.distance),
            fmt(self.mean_planar_speed),
        ]
        .join(",")
    }
}

/// Every trajectory metric at once.
pub fn metrics_report(
    trajectory: &[TrajectorySample],
    model: &RobotModel,
    robot_mass: f64,
    g: f64,
) -> Result<MetricsReport> {
    check_cot_inputs(trajectory, robot_mass, g)?;
    let parts = cot_parts(trajectory, model)?;
    if parts.mean_speed < MIN_COT_SPEED {
        return Err(Error::UndefinedCot {
            speed: parts.mean_speed,
        });
    }
    let denom = robot_mass * g * parts.mean_speed;
    let (cot, cot_signed) = (parts.mean_rectified / denom, parts.mean_signed / denom);
    Ok(MetricsReport {
        mean_mechanical_power: parts.mean_rectified,
        mean_signed_mechanical_power: parts.mean_signed,
        peak_mechanical_power: parts.peak_rectified,
        cot,
        cot_signed,
        rmse: RmseReport {
            pitch: velocity_rmse(trajectory, RmseChannel::PitchRate)?,
            roll: velocity_rmse(trajectory, RmseChannel::RollRate)?,
            yaw: velocity_rmse(trajectory, RmseChannel::YawRate)?,
            planar_speed: velocity_rmse(trajectory, RmseChannel::PlanarSpeed)?,
        },
        duration: parts.duration,
        distance: parts.distance,
        mean_planar_speed: parts.mean_speed,
    })
}
