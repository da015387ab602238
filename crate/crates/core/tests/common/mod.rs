#![allow(dead_code)]

pub mod disc;
pub mod kinematics;
pub mod terms;

use std::path::PathBuf;

use imfkit::discriminator::{train, DiscriminatorNet, TrainConfig};
use imfkit::{parse_model, RobotModel};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const BUNDLED: [&str; 4] = ["single_body", "planar_chain", "planar_biped", "quadruped"];

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn bundled(name: &str) -> RobotModel {
    let path = models_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_model(&text).unwrap()
}

/// `count` samples of `N(mean·1, I)` in `R^dim`.
pub fn gaussian_cluster(dim: usize, mean: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| {
            DVector::from_fn(dim, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                mean + z
            })
        })
        .collect()
}

pub struct SeparableRun {
    pub net: DiscriminatorNet,
    pub reference: Vec<DVector<f64>>,
    pub policy: Vec<DVector<f64>>,
}

pub const SEPARABLE_SAMPLES: usize = 256;

pub fn separable_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-3,
        epochs: 500,
        batch_size: 64,
        w_gp: 10.0,
        seed: 7,
        hidden_sizes: vec![32, 16],
        ..TrainConfig::default()
    }
}

/// Trains `[12, 32, 16, 1]` on clusters at `ref_mean` and `pol_mean`.
pub fn separable_run(ref_mean: f64, pol_mean: f64) -> SeparableRun {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let reference = gaussian_cluster(12, ref_mean, SEPARABLE_SAMPLES, &mut rng);
    let policy = gaussian_cluster(12, pol_mean, SEPARABLE_SAMPLES, &mut rng);
    let config = separable_config();
    let init = DiscriminatorNet::new(&config.layer_sizes(12), config.leaky_slope, 99).unwrap();
    let (net, _) = train(&init, &reference, &policy, &config).unwrap();
    SeparableRun { net, reference, policy }
}

use imfkit::rewards::TrajectorySample;
use imfkit::RobotState;

/// Perfect tracking of a nonzero command, level base at the nominal
/// height, no effort, no contacts.
pub fn quiet_sample(model: &RobotModel, time: f64) -> TrajectorySample {
    let n = model.n();
    let n_act = model.n_act();
    let feet = model.contact_frames().len();
    let mut state = RobotState::zero(model);
    state.base_position[2] = model.nominal_base_height().unwrap_or(0.0);
    TrajectorySample {
        time,
        state,
        measured_planar_velocity: [0.5, 0.0],
        measured_yaw_rate: 0.2,
        measured_vertical_velocity: 0.0,
        measured_rollpitch_rates: [0.0, 0.0],
        gravity_in_body: [0.0, 0.0, -1.0],
        base_height: model.nominal_base_height().unwrap_or(0.0),
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

/// Hip flexion 0.8 rad and knee −1.6 rad on every leg.
pub fn crouched(model: &RobotModel) -> RobotState {
    let mut s = RobotState::zero(model);
    for (j, joint) in model.joints().iter().enumerate() {
        if joint.name.ends_with("hip_flexion") {
            s.joint_positions[j] = 0.8;
        } else if joint.name.ends_with("knee") {
            s.joint_positions[j] = -1.6;
        }
    }
    s
}
