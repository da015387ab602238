//! Operational-space inertia, its locked-joint counterpart, and the impact
//! mitigation factor built from the two.

use nalgebra::{DMatrix, DMatrixView, Matrix3, Vector3};

use crate::dynamics::{
    contact_jacobian_with, forward_kinematics, mass_matrix_with, ContactJacobian, Kinematics,
    MassMatrix,
};
use crate::error::{Error, Result};
use crate::model::{RobotModel, RobotState, BASE_DOF, CONTACT_DIM};

/// Upper clamp applied to ξ before taking the log.
pub const XI_CLAMP_EPS: f64 = 1e-9;

/// Relative singular-value floor for the contact Jacobian.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ImfResult {
    pub frame: String,
    /// Λ
    pub lambda: Matrix3<f64>,
    /// Λ_L
    pub lambda_locked: Matrix3<f64>,
    /// Ξ = I − Λ Λ_L⁻¹
    pub xi_matrix: Matrix3<f64>,
    /// ξ = det Ξ, before the reward's upper clamp.
    pub xi: f64,
    pub reward: f64,
    /// Eigenvalues of Λ Λ_L⁻¹, ascending.
    pub ratio_eigenvalues: Vector3<f64>,
}

impl ImfResult {
    /// Impulse for an impact at contact velocity `v`: `-Λ v`.
    pub fn impulse(&self, v: &Vector3<f64>) -> Vector3<f64> {
        -(self.lambda * v)
    }

    /// Locked-joint impulse `-Λ_L v`.
    pub fn impulse_locked(&self, v: &Vector3<f64>) -> Vector3<f64> {
        -(self.lambda_locked * v)
    }
}

fn symmetrize(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// Inverse operational inertia `J M⁻¹ Jᵀ` for a (sub)system, symmetrized.
fn mobility(inertia: DMatrixView<'_, f64>, jac: DMatrixView<'_, f64>) -> Result<Matrix3<f64>> {
    let sv = jac.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if sv.len() < CONTACT_DIM || !(lo > RANK_TOLERANCE * hi) {
        return Err(Error::RankDeficient { sigma_min: lo });
    }
    let chol = inertia
        .clone_owned()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
    let x: DMatrix<f64> = chol.solve(&jac.transpose());
    let a = jac * x;
    Ok(symmetrize(&Matrix3::from_fn(|r, c| a[(r, c)])))
}

fn invert_spd(m: &Matrix3<f64>, what: &str) -> Result<Matrix3<f64>> {
    let inv = m
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.into()))?
        .inverse();
    Ok(symmetrize(&inv))
}

/// Operational-space inertia `Λ = (J H⁻¹ Jᵀ)⁻¹` at a contact frame.
pub fn osim(model: &RobotModel, state: &RobotState, frame: &str) -> Result<Matrix3<f64>> {
    let index = model.frame_index(frame)?;
    let kin = forward_kinematics(model, state);
    let h = mass_matrix_with(model, &kin);
    let jac = contact_jacobian_with(model, &kin, index);
    invert_spd(&mobility(h.full.as_view(), jac.full.as_view())?, "J H⁻¹ Jᵀ")
}

/// Locked-joint operational inertia `Λ_L = (J_b H_bb⁻¹ J_bᵀ)⁻¹`.
pub fn osim_locked(model: &RobotModel, state: &RobotState, frame: &str) -> Result<Matrix3<f64>> {
    let index = model.frame_index(frame)?;
    let kin = forward_kinematics(model, state);
    let h = mass_matrix_with(model, &kin);
    let jac = contact_jacobian_with(model, &kin, index);
    invert_spd(&mobility(h.h_bb(), jac.j_b())?, "J_b H_bb⁻¹ J_bᵀ")
}

/// `−log(1 − min(ξ, 1 − 1e-9))`.
///
/// Accepts ξ in `[0, 1]` with a 1e-12 slack on either side; values inside the
/// slack are clamped.
pub fn imf_reward(xi: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&xi) {
        return Err(Error::Domain(format!("xi = {xi} outside [0, 1]")));
    }
    let clamped = xi.clamp(0.0, 1.0 - XI_CLAMP_EPS);
    Ok(-(1.0 - clamped).ln())
}

/// Full IMF evaluation at one contact frame.
pub fn impact_mitigation(model: &RobotModel, state: &RobotState, frame: &str) -> Result<ImfResult> {
    let index = model.frame_index(frame)?;
    let kin = forward_kinematics(model, state);
    let h = mass_matrix_with(model, &kin);
    impact_mitigation_with(model, &kin, &h, index)
}

/// IMF at every contact frame; a singular frame does not affect the others.
pub fn impact_mitigation_all(model: &RobotModel, state: &RobotState) -> Vec<Result<ImfResult>> {
    let kin = forward_kinematics(model, state);
    let h = mass_matrix_with(model, &kin);
    (0..model.contact_frames().len())
        .map(|k| impact_mitigation_with(model, &kin, &h, k))
        .collect()
}

pub(crate) fn impact_mitigation_with(
    model: &RobotModel,
    kin: &Kinematics,
    h: &MassMatrix,
    frame: usize,
) -> Result<ImfResult> {
    let jac = contact_jacobian_with(model, kin, frame);
    from_parts(h, &jac)
}

pub(crate) fn from_parts(h: &MassMatrix, jac: &ContactJacobian) -> Result<ImfResult> {
    debug_assert_eq!(jac.full.ncols(), h.n() + BASE_DOF);
    let mob = mobility(h.full.as_view(), jac.full.as_view())?;
    let lambda = invert_spd(&mob, "J H⁻¹ Jᵀ")?;
    if h.n() == 0 {
        // Without joints the locked system is the full system: Λ_L = Λ exactly.
        return Ok(ImfResult {
            frame: jac.frame.clone(),
            lambda,
            lambda_locked: lambda,
            xi_matrix: Matrix3::zeros(),
            xi: 0.0,
            reward: 0.0,
            ratio_eigenvalues: Vector3::repeat(1.0),
        });
    }
    let mob_locked = mobility(h.h_bb(), jac.j_b())?;
    let lambda_locked = invert_spd(&mob_locked, "J_b H_bb⁻¹ J_bᵀ")?;

    // Λ_L⁻¹ is the locked mobility itself.
    let ratio = lambda * mob_locked;
    let xi_matrix = Matrix3::identity() - ratio;

    // Λ Λ_L⁻¹ = Λ L Lᵀ is similar to the symmetric Lᵀ Λ L.
    let l = mob_locked
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("J_b H_bb⁻¹ J_bᵀ".into()))?
        .unpack();
    let mut ratio_eigenvalues = symmetrize(&(l.transpose() * lambda * l)).symmetric_eigenvalues();
    ratio_eigenvalues
        .as_mut_slice()
        .sort_by(|a, b| a.total_cmp(b));
    // det Ξ = Π (1 − λᵢ); Λ ≤ Λ_L bounds every λᵢ by 1, so negative factors
    // are round-off on directions the joints cannot absorb.
    let xi = ratio_eigenvalues.iter().map(|l| (1.0 - l).max(0.0)).product::<f64>();

    let reward = imf_reward(xi.clamp(0.0, 1.0))?;
    Ok(ImfResult {
        frame: jac.frame.clone(),
        lambda,
        lambda_locked,
        xi_matrix,
        xi,
        reward,
        ratio_eigenvalues,
    })
}
