//! Line-delimited JSON trajectory logs.
//!
//! The first line is a header object with `"schema": "trajlog/1"`; every
//! following non-blank line is one [`TrajectorySample`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RobotModel;
use crate::rewards::TrajectorySample;

pub const SCHEMA: &str = "trajlog/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryHeader {
    pub schema: String,
    /// Path of the model file the log was recorded against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub units: BTreeMap<String, String>,
}

impl TrajectoryHeader {
    pub fn new(model: Option<String>) -> Self {
        let channels = [
            "time",
            "state",
            "measured_planar_velocity",
            "measured_yaw_rate",
            "measured_vertical_velocity",
            "measured_rollpitch_rates",
            "gravity_in_body",
            "base_height",
            "command",
            "joint_torques",
            "joint_accelerations",
            "action",
            "prev_action",
            "foot_contact",
            "undesired_contact",
            "foot_air_time",
            "first_contact",
        ];
        let units = [
            ("time", "s"),
            ("measured_planar_velocity", "m/s"),
            ("measured_yaw_rate", "rad/s"),
            ("measured_vertical_velocity", "m/s"),
            ("measured_rollpitch_rates", "rad/s"),
            ("base_height", "m"),
            ("joint_torques", "N*m"),
            ("joint_accelerations", "rad/s^2"),
            ("foot_air_time", "s"),
        ];
        Self {
            schema: SCHEMA.into(),
            model,
            channels: channels.iter().map(|c| c.to_string()).collect(),
            units: units.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub header: TrajectoryHeader,
    pub samples: Vec<TrajectorySample>,
}

/// Parses without model checks. Line numbers in errors are 1-based.
pub fn parse_log(text: &str) -> Result<TrajectoryLog> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Schema("trajectory log is empty".into()))?;
    let header: TrajectoryHeader = serde_json::from_str(first)
        .map_err(|e| Error::Schema(format!("line 1 (header): {e}")))?;
    if header.schema != SCHEMA {
        return Err(Error::Schema(format!(
            "unsupported schema `{}`, expected `{SCHEMA}`",
            header.schema
        )));
    }
    let samples = lines
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Schema(format!("line {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<TrajectorySample>>>()?;
    Ok(TrajectoryLog { header, samples })
}

/// Strictly increasing timestamps and model-consistent dimensions.
pub fn validate_log(log: &TrajectoryLog, model: &RobotModel) -> Result<()> {
    for (i, s) in log.samples.iter().enumerate() {
        s.check_dimensions(model)
            .map_err(|e| Error::Schema(format!("sample {i}: {e}")))?;
    }
    check_timestamps(&log.samples)
}

pub fn check_timestamps(samples: &[TrajectorySample]) -> Result<()> {
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].time > w[0].time) {
            return Err(Error::Domain(format!(
                "timestamps must be strictly increasing: sample {} has t = {}, sample {} has t = {}",
                i,
                w[0].time,
                i + 1,
                w[1].time
            )));
        }
    }
    Ok(())
}

/// Fills `joint_accelerations` from joint velocities by central differences
/// on the (possibly non-uniform) time grid, one-sided at the ends.
pub fn fill_accelerations(samples: &mut [TrajectorySample]) -> Result<()> {
    check_timestamps(samples)?;
    let len = samples.len();
    if len < 2 {
        return Err(Error::Precondition(
            "acceleration fallback needs at least 2 samples".into(),
        ));
    }
    let velocities: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.state.joint_velocities.clone())
        .collect();
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    for (k, s) in samples.iter_mut().enumerate() {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(len - 1));
        let dt = times[b] - times[a];
        if velocities[a].len() != velocities[b].len() {
            return Err(Error::Dimension {
                what: "state.joint_velocities".into(),
                expected: velocities[a].len(),
                actual: velocities[b].len(),
            });
        }
        s.joint_accelerations = velocities[b]
            .iter()
            .zip(&velocities[a])
            .map(|(vb, va)| (vb - va) / dt)
            .collect();
    }
    Ok(())
}

pub fn write_log(log: &TrajectoryLog) -> Result<String> {
    let mut out = serde_json::to_string(&log.header).map_err(|e| Error::Schema(e.to_string()))?;
    out.push('\n');
    for s in &log.samples {
        out.push_str(&serde_json::to_string(s).map_err(|e| Error::Schema(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}
