#![allow(dead_code)]

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::Command;

use imfkit::rewards::TrajectorySample;
use imfkit::trajlog::{write_log, TrajectoryHeader, TrajectoryLog};
use imfkit::{parse_model, RobotModel, RobotState};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn imfkit<S: AsRef<OsStr>>(args: &[S]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_imfkit"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn model_path(name: &str) -> PathBuf {
    repo(&format!("models/{name}.json"))
}

pub fn model(name: &str) -> RobotModel {
    parse_model(&std::fs::read_to_string(model_path(name)).unwrap()).unwrap()
}

/// Level base at the nominal height tracking `[0.5, 0, 0.2]` exactly with no
/// effort and no contacts.
pub fn quiet_sample(model: &RobotModel, time: f64) -> TrajectorySample {
    let (n, n_act, feet) = (model.n(), model.n_act(), model.contact_frames().len());
    let height = model.nominal_base_height().unwrap_or(0.0);
    let mut state = RobotState::zero(model);
    state.base_position[2] = height;
    TrajectorySample {
        time,
        state,
        measured_planar_velocity: [0.5, 0.0],
        measured_yaw_rate: 0.2,
        measured_vertical_velocity: 0.0,
        measured_rollpitch_rates: [0.0, 0.0],
        gravity_in_body: [0.0, 0.0, -1.0],
        base_height: height,
        command: [0.5, 0.0, 0.2],
        joint_torques: vec![0.0; n_act],
        joint_accelerations: vec![0.0; n],
        action: vec![0.0; n_act],
        prev_action: vec![0.0; n_act],
        foot_contact: vec![false; feet],
        undesired_contact: false,
        foot_air_time: vec![0.0; feet],
        first_contact: vec![false; feet],
    }
}

pub fn save_log(dir: &Path, name: &str, model: Option<&Path>, samples: Vec<TrajectorySample>) -> PathBuf {
    let log = TrajectoryLog {
        header: TrajectoryHeader::new(model.map(|p| p.display().to_string())),
        samples,
    };
    let path = dir.join(name);
    std::fs::write(&path, write_log(&log).unwrap()).unwrap();
    path
}

/// Parses a CSV with a header row into column name to cell strings.
pub fn csv_columns(text: &str) -> Vec<(String, Vec<String>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    header
        .into_iter()
        .enumerate()
        .map(|(i, name)| (name, rows.iter().map(|r| r[i].clone()).collect()))
        .collect()
}

pub fn column<'a>(cols: &'a [(String, Vec<String>)], name: &str) -> &'a [String] {
    &cols.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("no column {name}")).1
}
