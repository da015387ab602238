//! Spatial-algebra kernel for a floating-base tree.
//!
//! Spatial quantities are expressed in world coordinates at the world origin,
//! ordered `(angular; linear)`. With that convention the base's world twist
//! and every joint contribute a fixed motion-subspace column, and the joint
//! space inertia follows from composite-rigid-body accumulation.
//!
//! All functions assume a state that went through [`validate_state`].
//!
//! [`validate_state`]: crate::model::validate_state

use nalgebra::{
    DMatrix, DMatrixView, DVector, Isometry3, Matrix3, Matrix6, Translation3, UnitQuaternion,
    Vector3, Vector6,
};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{JointKind, RobotModel, RobotState, BASE_DOF, CONTACT_DIM};

/// World poses of every body plus per-joint world axis and anchor.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// Indexed by body: 0 is the base, `j + 1` the child of joint `j`.
    pub body_poses: Vec<Isometry3<f64>>,
    pub joint_axes: Vec<Vector3<f64>>,
    pub joint_anchors: Vec<Vector3<f64>>,
    /// World position of each contact frame, model order.
    pub contact_positions: Vec<Vector3<f64>>,
}

impl Kinematics {
    /// Base pose.
    pub fn base_pose(&self) -> &Isometry3<f64> {
        &self.body_poses[0]
    }
}

pub fn forward_kinematics(model: &RobotModel, state: &RobotState) -> Kinematics {
    let n = model.n();
    debug_assert_eq!(state.joint_positions.len(), n);
    let mut body_poses = vec![Isometry3::identity(); n + 1];
    let mut joint_axes = vec![Vector3::zeros(); n];
    let mut joint_anchors = vec![Vector3::zeros(); n];
    body_poses[0] = state.base_pose();

    for &j in model.topo_order() {
        let joint = &model.joints()[j];
        let frame = body_poses[model.parent_body(j)] * model.joint_origin(j);
        let axis = joint.axis_vector();
        let q = state.joint_positions[j];
        let motion = match joint.kind {
            JointKind::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(axis * q),
            ),
            JointKind::Prismatic => Isometry3::from_parts(
                Translation3::from(axis * q),
                UnitQuaternion::identity(),
            ),
        };
        joint_axes[j] = frame.rotation * axis;
        joint_anchors[j] = frame.translation.vector;
        body_poses[j + 1] = frame * motion;
    }

    let contact_positions = model
        .contact_frames()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let pose = &body_poses[model.frame_body(k)];
            pose * nalgebra::Point3::from(Vector3::from(f.offset))
        })
        .map(|p| p.coords)
        .collect();

    Kinematics {
        body_poses,
        joint_axes,
        joint_anchors,
        contact_positions,
    }
}

/// Motion-subspace column of joint `j` at the world origin.
fn joint_subspace(model: &RobotModel, kin: &Kinematics, j: usize) -> Vector6<f64> {
    let a = kin.joint_axes[j];
    match model.joints()[j].kind {
        JointKind::Revolute => {
            let v = kin.joint_anchors[j].cross(&a);
            Vector6::new(a.x, a.y, a.z, v.x, v.y, v.z)
        }
        JointKind::Prismatic => Vector6::new(0.0, 0.0, 0.0, a.x, a.y, a.z),
    }
}

/// Motion subspace of the base twist `(v_base, ω)` at the world origin (6×6).
fn base_subspace(base_origin: &Vector3<f64>) -> Matrix6<f64> {
    let mut s = Matrix6::zeros();
    for k in 0..3 {
        let e = Vector3::ith(k, 1.0);
        // linear: (0, e_k)
        s[(3 + k, k)] = 1.0;
        // angular: (e_k, p_b × e_k)
        let v = base_origin.cross(&e);
        s[(k, 3 + k)] = 1.0;
        s.fixed_view_mut::<3, 1>(3, 3 + k).copy_from(&v);
    }
    s
}

/// Spatial inertia of a body about the world origin.
fn body_spatial_inertia(mass: f64, com: &Vector3<f64>, inertia_com: &Matrix3<f64>) -> Matrix6<f64> {
    let cx = com.cross_matrix();
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(inertia_com - mass * cx * cx));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * cx));
    out.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(mass * cx.transpose()));
    out.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * mass));
    out
}

/// Joint-space inertia with base/joint partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    pub full: DMatrix<f64>,
}

impl MassMatrix {
    pub fn n(&self) -> usize {
        self.full.nrows() - BASE_DOF
    }

    pub fn h_bb(&self) -> DMatrixView<'_, f64> {
        self.full.view((0, 0), (BASE_DOF, BASE_DOF))
    }

    pub fn h_bj(&self) -> DMatrixView<'_, f64> {
        self.full.view((0, BASE_DOF), (BASE_DOF, self.n()))
    }

    pub fn h_jb(&self) -> DMatrixView<'_, f64> {
        self.full.view((BASE_DOF, 0), (self.n(), BASE_DOF))
    }

    pub fn h_jj(&self) -> DMatrixView<'_, f64> {
        self.full.view((BASE_DOF, BASE_DOF), (self.n(), self.n()))
    }

    /// Kinetic energy `½ q̇ᵀ H q̇`.
    pub fn kinetic_energy(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.full * v))
    }
}

/// Composite-rigid-body mass matrix.
pub fn mass_matrix(model: &RobotModel, state: &RobotState) -> MassMatrix {
    let kin = forward_kinematics(model, state);
    mass_matrix_with(model, &kin)
}

pub(crate) fn mass_matrix_with(model: &RobotModel, kin: &Kinematics) -> MassMatrix {
    let n = model.n();
    let nv = n + BASE_DOF;

    let mut composite: Vec<Matrix6<f64>> = (0..model.body_count())
        .map(|b| {
            let link = model.body_link(b);
            let pose = &kin.body_poses[b];
            let rot = pose.rotation.to_rotation_matrix();
            let com = pose * nalgebra::Point3::from(link.com_vector());
            let inertia = rot.matrix() * link.inertia_matrix() * rot.matrix().transpose();
            body_spatial_inertia(link.mass, &com.coords, &inertia)
        })
        .collect();
    // leaf to root
    for &j in model.topo_order().iter().rev() {
        let child = composite[j + 1];
        composite[model.parent_body(j)] += child;
    }

    let subspaces: Vec<Vector6<f64>> = (0..n).map(|j| joint_subspace(model, kin, j)).collect();
    let s_base = base_subspace(&kin.base_pose().translation.vector);

    let mut h = DMatrix::zeros(nv, nv);
    let h_bb = s_base.transpose() * composite[0] * s_base;
    let h_bb = (h_bb + h_bb.transpose()) * 0.5;
    h.view_mut((0, 0), (BASE_DOF, BASE_DOF)).copy_from(&h_bb);

    for j in 0..n {
        let force = composite[j + 1] * subspaces[j];
        let (row, col) = (BASE_DOF + j, BASE_DOF + j);
        h[(row, col)] = subspaces[j].dot(&force);
        let mut body = model.parent_body(j);
        while body != 0 {
            let k = body - 1;
            let value = subspaces[k].dot(&force);
            h[(row, BASE_DOF + k)] = value;
            h[(BASE_DOF + k, col)] = value;
            body = model.parent_body(k);
        }
        let coupling = s_base.transpose() * force;
        for b in 0..BASE_DOF {
            h[(row, b)] = coupling[b];
            h[(b, col)] = coupling[b];
        }
    }
    MassMatrix { full: h }
}

/// Linear-velocity Jacobian of a contact point, world axes at the point.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactJacobian {
    pub full: DMatrix<f64>,
    pub frame: String,
}

impl ContactJacobian {
    pub fn j_b(&self) -> DMatrixView<'_, f64> {
        self.full.view((0, 0), (CONTACT_DIM, BASE_DOF))
    }

    pub fn j_j(&self) -> DMatrixView<'_, f64> {
        let n = self.full.ncols() - BASE_DOF;
        self.full.view((0, BASE_DOF), (CONTACT_DIM, n))
    }
}

pub fn contact_jacobian(model: &RobotModel, state: &RobotState, frame: &str) -> Result<ContactJacobian> {
    let index = model.frame_index(frame)?;
    let kin = forward_kinematics(model, state);
    Ok(contact_jacobian_with(model, &kin, index))
}

pub(crate) fn contact_jacobian_with(model: &RobotModel, kin: &Kinematics, frame: usize) -> ContactJacobian {
    let p = kin.contact_positions[frame];
    let base = kin.base_pose().translation.vector;
    let mut jac = DMatrix::zeros(CONTACT_DIM, model.nv());
    jac.view_mut((0, 0), (3, 3)).fill_with_identity();
    // ω × (p − p_b) = −[p − p_b]× ω
    jac.view_mut((0, 3), (3, 3))
        .copy_from(&(-(p - base).cross_matrix()));
    for j in model.joints_on_path(model.frame_body(frame)) {
        let s = joint_subspace(model, kin, j);
        let angular = Vector3::new(s[0], s[1], s[2]);
        let linear = Vector3::new(s[3], s[4], s[5]);
        let column = linear + angular.cross(&p);
        jac.view_mut((0, BASE_DOF + j), (3, 1)).copy_from(&column);
    }
    ContactJacobian {
        full: jac,
        frame: model.contact_frames()[frame].name.clone(),
    }
}

/// Result of a perfectly inelastic point impact.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactSolution {
    /// Contact impulse (N·s), world axes.
    pub impulse: Vector3<f64>,
    pub post_velocity: DVector<f64>,
}

/// Solves the impact KKT system `H Δq̇ = Jᵀρ`, `J(q̇ + Δq̇) = 0`.
///
/// With `lock_joints` the velocity change is restricted to the base
/// subspace (`Δq̇_j = 0`), the joint rows absorbing whatever constraint
/// torque is required. The block system is factored directly with a fully
/// pivoted LU; the Schur-complement form is intentionally not used here.
pub fn solve_constrained_impulse(
    model: &RobotModel,
    state: &RobotState,
    frame: &str,
    lock_joints: bool,
) -> Result<ImpactSolution> {
    let index = model.frame_index(frame)?;
    let kin = forward_kinematics(model, state);
    let h = mass_matrix_with(model, &kin);
    let jac = contact_jacobian_with(model, &kin, index);
    solve_impulse_with(&h, &jac, &state.velocity(), lock_joints)
}

pub(crate) fn solve_impulse_with(
    h: &MassMatrix,
    jac: &ContactJacobian,
    qdot: &DVector<f64>,
    lock_joints: bool,
) -> Result<ImpactSolution> {
    let nv = h.full.nrows();
    let dof = if lock_joints { BASE_DOF } else { nv };
    let size = dof + CONTACT_DIM;

    let mut kkt = DMatrix::zeros(size, size);
    kkt.view_mut((0, 0), (dof, dof))
        .copy_from(&h.full.view((0, 0), (dof, dof)));
    let j_used = jac.full.view((0, 0), (CONTACT_DIM, dof));
    kkt.view_mut((0, dof), (dof, CONTACT_DIM))
        .copy_from(&(-j_used.transpose()));
    kkt.view_mut((dof, 0), (CONTACT_DIM, dof)).copy_from(&j_used);

    let v_contact = &jac.full * qdot;
    let mut rhs = DVector::zeros(size);
    rhs.rows_mut(dof, CONTACT_DIM).copy_from(&(-&v_contact));

    let lu = kkt.full_piv_lu();
    let pivots = lu.u().diagonal().map(f64::abs);
    let (lo, hi) = (pivots.min(), pivots.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < 1e14) {
        return Err(Error::SingularSystem { condition });
    }
    let sol = lu.solve(&rhs).ok_or(Error::SingularSystem { condition })?;

    let mut post = qdot.clone();
    for k in 0..dof {
        post[k] += sol[k];
    }
    Ok(ImpactSolution {
        impulse: Vector3::new(sol[dof], sol[dof + 1], sol[dof + 2]),
        post_velocity: post,
    })
}

/// Random state: joints uniform within limits, orientation uniform on the
/// unit-quaternion sphere, base position and every velocity component
/// i.i.d. uniform in `[-1, 1]`.
pub fn sample_state<R: Rng + ?Sized>(model: &RobotModel, rng: &mut R) -> RobotState {
    let mut state = RobotState::zero(model);
    for k in 0..3 {
        state.base_position[k] = rng.random_range(-1.0..=1.0);
    }
    let mut quat = [0.0f64; 4];
    loop {
        for q in quat.iter_mut() {
            *q = rng.sample(StandardNormal);
        }
        let norm = quat.iter().map(|q| q * q).sum::<f64>().sqrt();
        if norm > 1e-6 {
            state.base_orientation = quat.map(|q| q / norm);
            break;
        }
    }
    for (q, joint) in state.joint_positions.iter_mut().zip(model.joints()) {
        *q = rng.random_range(joint.lower()..=joint.upper());
    }
    for k in 0..3 {
        state.base_linear_velocity[k] = rng.random_range(-1.0..=1.0);
        state.base_angular_velocity[k] = rng.random_range(-1.0..=1.0);
    }
    for qd in state.joint_velocities.iter_mut() {
        *qd = rng.random_range(-1.0..=1.0);
    }
    state
}
