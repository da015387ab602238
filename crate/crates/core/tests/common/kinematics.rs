use std::collections::HashMap;

use imfkit::model::JointKind;
use imfkit::{RobotModel, RobotState};
use nalgebra::{Matrix3, Rotation3, Vector3};

/// World pose, angular velocity and origin velocity of one link.
#[derive(Clone)]
pub struct LinkMotion {
    pub rotation: Matrix3<f64>,
    pub origin: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

/// Rodrigues rotation about a unit axis.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.cross_matrix();
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Recursive outward velocity propagation keyed by link name, written
/// without the library's spatial-algebra machinery.
pub fn propagate(model: &RobotModel, state: &RobotState) -> HashMap<String, LinkMotion> {
    let mut out = HashMap::new();
    let base_rot = state.rotation().to_rotation_matrix().into_inner();
    out.insert(
        model.base_link().name.clone(),
        LinkMotion {
            rotation: base_rot,
            origin: state.position(),
            omega: Vector3::from(state.base_angular_velocity),
            velocity: Vector3::from(state.base_linear_velocity),
        },
    );
    let mut pending: Vec<usize> = (0..model.n()).collect();
    while !pending.is_empty() {
        pending.retain(|&j| {
            let joint = &model.joints()[j];
            let Some(parent) = out.get(&joint.parent).cloned() else {
                return true;
            };
            let o = &joint.origin;
            let r_origin = Rotation3::from_euler_angles(o.rpy[0], o.rpy[1], o.rpy[2]).into_inner();
            let frame_rot = parent.rotation * r_origin;
            let frame_pos = parent.origin + parent.rotation * Vector3::from(o.xyz);
            let axis_local = Vector3::from(joint.axis);
            let axis = frame_rot * axis_local;
            let (q, qd) = (state.joint_positions[j], state.joint_velocities[j]);
            let motion = match joint.kind {
                JointKind::Revolute => {
                    let origin = frame_pos;
                    LinkMotion {
                        rotation: frame_rot * axis_angle(&axis_local, q),
                        origin,
                        omega: parent.omega + axis * qd,
                        velocity: parent.velocity + parent.omega.cross(&(origin - parent.origin)),
                    }
                }
                JointKind::Prismatic => {
                    let origin = frame_pos + axis * q;
                    LinkMotion {
                        rotation: frame_rot,
                        origin,
                        omega: parent.omega,
                        velocity: parent.velocity
                            + parent.omega.cross(&(origin - parent.origin))
                            + axis * qd,
                    }
                }
            };
            out.insert(joint.child.clone(), motion);
            false
        });
    }
    out
}

pub fn kinetic_energy_oracle(model: &RobotModel, state: &RobotState) -> f64 {
    let motions = propagate(model, state);
    std::iter::once(model.base_link())
        .chain(model.links())
        .map(|link| {
            let m = &motions[&link.name];
            let com = m.origin + m.rotation * Vector3::from(link.com);
            let v_com = m.velocity + m.omega.cross(&(com - m.origin));
            let inertia = m.rotation * link.inertia_matrix() * m.rotation.transpose();
            0.5 * link.mass * v_com.norm_squared() + 0.5 * m.omega.dot(&(inertia * m.omega))
        })
        .sum()
}

pub fn contact_oracle(model: &RobotModel, state: &RobotState, frame: usize) -> Vector3<f64> {
    let f = &model.contact_frames()[frame];
    let m = &propagate(model, state)[&f.link];
    m.origin + m.rotation * Vector3::from(f.offset)
}
