//! Randomized cross-validation of the OSIM impulse formulas against direct
//! solves of the impact KKT system.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{
    contact_jacobian_with, forward_kinematics, mass_matrix_with, sample_state, solve_impulse_with,
};
use crate::error::{Error, Result};
use crate::imf::from_parts;
use crate::model::{RobotModel, RobotState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleFailure {
    pub trial: usize,
    pub frame: String,
    pub state_digest: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub trials: usize,
    pub seed: u64,
    pub max_rel_error_free: f64,
    pub max_rel_error_locked: f64,
    pub max_xi: f64,
    pub min_xi: f64,
    /// Smallest and largest eigenvalue of Λ Λ_L⁻¹ seen.
    pub min_ratio_eigenvalue: f64,
    pub max_ratio_eigenvalue: f64,
    pub failures: Vec<OracleFailure>,
}

/// `‖ρ_formula − ρ_kkt‖ / max(‖ρ_kkt‖, 1e-12)`.
pub fn relative_error(formula: &Vector3<f64>, reference: &Vector3<f64>) -> f64 {
    (formula - reference).norm() / reference.norm().max(1e-12)
}

/// First 16 hex digits of a SHA-256 over the state's IEEE-754 bit patterns.
pub fn state_digest(state: &RobotState) -> String {
    let mut hasher = Sha256::new();
    let values = state
        .base_position
        .iter()
        .chain(&state.base_orientation)
        .chain(&state.joint_positions)
        .chain(&state.base_linear_velocity)
        .chain(&state.base_angular_velocity)
        .chain(&state.joint_velocities);
    for v in values {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct TrialOutcome {
    err_free: f64,
    err_locked: f64,
    xi: f64,
    eig_min: f64,
    eig_max: f64,
}

fn evaluate(model: &RobotModel, state: &RobotState, frame: usize) -> Result<TrialOutcome> {
    let kin = forward_kinematics(model, state);
    let h = mass_matrix_with(model, &kin);
    let jac = contact_jacobian_with(model, &kin, frame);
    let qdot = state.velocity();
    let v = &jac.full * &qdot;
    let v = Vector3::new(v[0], v[1], v[2]);

    let imf = from_parts(&h, &jac)?;
    let free = solve_impulse_with(&h, &jac, &qdot, false)?;
    let locked = solve_impulse_with(&h, &jac, &qdot, true)?;
    Ok(TrialOutcome {
        err_free: relative_error(&imf.impulse(&v), &free.impulse),
        err_locked: relative_error(&imf.impulse_locked(&v), &locked.impulse),
        xi: imf.xi,
        eig_min: imf.ratio_eigenvalues[0],
        eig_max: imf.ratio_eigenvalues[2],
    })
}

/// Samples `trials` states and compares both impulse paths at every contact
/// frame. Deterministic in `(model, trials, seed)`.
pub fn run_oracle_campaign(model: &RobotModel, trials: usize, seed: u64) -> Result<OracleReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    if model.contact_frames().is_empty() {
        return Err(Error::Precondition("model has no contact frames".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        trials,
        seed,
        max_rel_error_free: 0.0,
        max_rel_error_locked: 0.0,
        max_xi: f64::NEG_INFINITY,
        min_xi: f64::INFINITY,
        min_ratio_eigenvalue: f64::INFINITY,
        max_ratio_eigenvalue: f64::NEG_INFINITY,
        failures: Vec::new(),
    };
    for trial in 0..trials {
        let state = sample_state(model, &mut rng);
        for (k, frame) in model.contact_frames().iter().enumerate() {
            match evaluate(model, &state, k) {
                Ok(o) => {
                    report.max_rel_error_free = report.max_rel_error_free.max(o.err_free);
                    report.max_rel_error_locked = report.max_rel_error_locked.max(o.err_locked);
                    report.max_xi = report.max_xi.max(o.xi);
                    report.min_xi = report.min_xi.min(o.xi);
                    report.min_ratio_eigenvalue = report.min_ratio_eigenvalue.min(o.eig_min);
                    report.max_ratio_eigenvalue = report.max_ratio_eigenvalue.max(o.eig_max);
                }
                Err(e) => report.failures.push(OracleFailure {
                    trial,
                    frame: frame.name.clone(),
                    state_digest: state_digest(&state),
                    error: e.to_string(),
                }),
            }
        }
    }
    Ok(report)
}
