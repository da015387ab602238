//! Robot description schema, validation, and configuration-space layout.
//!
//! Generalized velocities are laid out as `[base linear (world); base angular
//! (world); joint rates]`, so index 0..3 is the base origin's linear velocity,
//! 3..6 the base angular velocity and 6.. the joints in document order.
//! Every other module relies on exactly this ordering.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::{
    DVector, Isometry3, Matrix3, Quaternion, Translation3, UnitQuaternion, Vector3,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BASE_LINEAR: std::ops::Range<usize> = 0..3;
pub const BASE_ANGULAR: std::ops::Range<usize> = 3..6;
pub const BASE_DOF: usize = 6;

/// Contact analyses treat the leg end as a point: translational velocity only.
pub const CONTACT_DIM: usize = 3;

const AXIS_TOLERANCE: f64 = 1e-9;
const QUAT_RENORMALIZE_TOLERANCE: f64 = 1e-6;
const QUAT_DEGENERATE_NORM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Center-of-mass offset in the link frame (m).
    pub com: [f64; 3],
    /// `[Ixx, Iyy, Izz, Ixy, Ixz, Iyz]` about the com, link frame (kg·m²).
    pub inertia: [f64; 6],
}

impl LinkSpec {
    pub fn com_vector(&self) -> Vector3<f64> {
        Vector3::from(self.com)
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        let [ixx, iyy, izz, ixy, ixz, iyz] = self.inertia;
        Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz)
    }

    fn validate(&self) -> Result<()> {
        let physical = |reason: String| Error::Physical {
            element: self.name.clone(),
            reason,
        };
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return Err(physical(format!("mass must be positive, got {}", self.mass)));
        }
        if self.com.iter().chain(self.inertia.iter()).any(|v| !v.is_finite()) {
            return Err(physical("non-finite com or inertia entry".into()));
        }
        let eig = self.inertia_matrix().symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if eig.iter().any(|&v| v <= 0.0) {
            return Err(physical(format!(
                "inertia not positive definite (principal moments {:?})",
                eig.as_slice()
            )));
        }
        let slack = 1e-12 * scale;
        let (a, b, c) = (eig[0], eig[1], eig[2]);
        if a + b < c - slack || a + c < b - slack || b + c < a - slack {
            return Err(physical(format!(
                "principal moments {:?} violate the triangle inequality",
                eig.as_slice()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Rigid transform given as translation plus roll-pitch-yaw (extrinsic x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Origin {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Origin {
    pub fn isometry(&self) -> Isometry3<f64> {
        let [r, p, y] = self.rpy;
        Isometry3::from_parts(
            Translation3::from(Vector3::from(self.xyz)),
            UnitQuaternion::from_euler_angles(r, p, y),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub kind: JointKind,
    /// Unit axis in the joint (child) frame.
    pub axis: [f64; 3],
    /// Parent link frame to joint frame.
    #[serde(default)]
    pub origin: Origin,
    /// `[lower, upper]` in rad or m.
    pub limits: [f64; 2],
    pub actuated: bool,
    /// Nominal position used by stand-still shaping terms.
    #[serde(default)]
    pub default_position: f64,
}

impl JointSpec {
    pub fn axis_vector(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }

    pub fn lower(&self) -> f64 {
        self.limits[0]
    }

    pub fn upper(&self) -> f64 {
        self.limits[1]
    }

    fn validate(&self) -> Result<()> {
        let physical = |reason: String| Error::Physical {
            element: self.name.clone(),
            reason,
        };
        let values = self
            .axis
            .iter()
            .chain(self.origin.xyz.iter())
            .chain(self.origin.rpy.iter())
            .chain(std::iter::once(&self.default_position));
        if values.into_iter().any(|v| !v.is_finite()) {
            return Err(physical("non-finite axis, origin or default".into()));
        }
        let norm = self.axis_vector().norm();
        if (norm - 1.0).abs() > AXIS_TOLERANCE {
            return Err(physical(format!("axis norm {norm} is not unit")));
        }
        if self.limits.iter().any(|v| v.is_nan()) || !(self.lower() < self.upper()) {
            return Err(physical(format!(
                "limits [{}, {}] require lower < upper",
                self.lower(),
                self.upper()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactFrame {
    pub name: String,
    pub link: String,
    /// Point offset in the link frame (m).
    pub offset: [f64; 3],
}

/// On-disk robot description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Marks inertial parameters as invented rather than measured.
    #[serde(default)]
    pub synthetic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Standing base height (m); the default height-tracking target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_base_height: Option<f64>,
    pub base_link: LinkSpec,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub contact_frames: Vec<ContactFrame>,
}

/// Validated kinematic tree.
///
/// Body 0 is the base; body `j + 1` is the child link of joint `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    doc: ModelDocument,
    /// Parent body of each joint's child body (0 = base).
    parent_body: Vec<usize>,
    /// Joint indices ordered so that parents precede children.
    topo_order: Vec<usize>,
    /// Link spec of every body, indexed by body.
    body_links: Vec<usize>,
    /// Body index of every contact frame.
    frame_bodies: Vec<usize>,
    joint_origins: Vec<Isometry3<f64>>,
}

impl RobotModel {
    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        doc.base_link.validate()?;
        for link in &doc.links {
            link.validate()?;
        }
        for joint in &doc.joints {
            joint.validate()?;
        }

        // link name -> body index; base is body 0, link k in `links` is body k + 1
        // until we know which joint owns it.
        let mut link_index: HashMap<&str, usize> = HashMap::new();
        link_index.insert(doc.base_link.name.as_str(), usize::MAX);
        for (k, link) in doc.links.iter().enumerate() {
            if link_index.insert(link.name.as_str(), k).is_some() {
                return Err(Error::Tree {
                    element: link.name.clone(),
                    reason: "duplicate link name".into(),
                });
            }
        }
        let mut joint_names = HashSet::new();
        for joint in &doc.joints {
            if !joint_names.insert(joint.name.as_str()) {
                return Err(Error::Tree {
                    element: joint.name.clone(),
                    reason: "duplicate joint name".into(),
                });
            }
        }

        let base = doc.base_link.name.as_str();
        let mut parent_joint_of: HashMap<&str, usize> = HashMap::new();
        for (j, joint) in doc.joints.iter().enumerate() {
            for end in [&joint.parent, &joint.child] {
                if !link_index.contains_key(end.as_str()) {
                    return Err(Error::Tree {
                        element: joint.name.clone(),
                        reason: format!("references unknown link `{end}`"),
                    });
                }
            }
            if joint.child == base {
                return Err(Error::Tree {
                    element: joint.name.clone(),
                    reason: "base link cannot be a joint child".into(),
                });
            }
            if joint.child == joint.parent {
                return Err(Error::Tree {
                    element: joint.name.clone(),
                    reason: "joint connects a link to itself".into(),
                });
            }
            if parent_joint_of.insert(joint.child.as_str(), j).is_some() {
                return Err(Error::Tree {
                    element: joint.child.clone(),
                    reason: "link has more than one parent joint".into(),
                });
            }
        }
        for link in &doc.links {
            if !parent_joint_of.contains_key(link.name.as_str()) {
                return Err(Error::Tree {
                    element: link.name.clone(),
                    reason: "orphan link (no parent joint)".into(),
                });
            }
        }

        // Breadth-first from the base; anything unreached sits on a cycle.
        let mut children: HashMap<&str, Vec<usize>> = HashMap::new();
        for (j, joint) in doc.joints.iter().enumerate() {
            children.entry(joint.parent.as_str()).or_default().push(j);
        }
        let mut topo_order = Vec::with_capacity(doc.joints.len());
        let mut queue = VecDeque::from([base]);
        while let Some(link) = queue.pop_front() {
            if let Some(js) = children.get(link) {
                for &j in js {
                    topo_order.push(j);
                    queue.push_back(doc.joints[j].child.as_str());
                }
            }
        }
        if topo_order.len() != doc.joints.len() {
            let reached: HashSet<usize> = topo_order.iter().copied().collect();
            let offender = (0..doc.joints.len())
                .find(|j| !reached.contains(j))
                .map(|j| doc.joints[j].name.clone())
                .unwrap_or_default();
            return Err(Error::Tree {
                element: offender,
                reason: "joint is part of a cycle not connected to the base".into(),
            });
        }

        let body_of_link = |name: &str| -> usize {
            if name == base {
                0
            } else {
                parent_joint_of[name] + 1
            }
        };
        let parent_body = doc
            .joints
            .iter()
            .map(|j| body_of_link(&j.parent))
            .collect();
        let mut body_links = vec![usize::MAX; doc.joints.len() + 1];
        for (j, joint) in doc.joints.iter().enumerate() {
            body_links[j + 1] = link_index[joint.child.as_str()];
        }

        let mut frame_names = HashSet::new();
        let mut frame_bodies = Vec::with_capacity(doc.contact_frames.len());
        for frame in &doc.contact_frames {
            if !frame_names.insert(frame.name.as_str()) {
                return Err(Error::Tree {
                    element: frame.name.clone(),
                    reason: "duplicate contact frame name".into(),
                });
            }
            if !link_index.contains_key(frame.link.as_str()) {
                return Err(Error::Tree {
                    element: frame.name.clone(),
                    reason: format!("contact frame references unknown link `{}`", frame.link),
                });
            }
            if frame.offset.iter().any(|v| !v.is_finite()) {
                return Err(Error::Physical {
                    element: frame.name.clone(),
                    reason: "non-finite offset".into(),
                });
            }
            frame_bodies.push(body_of_link(&frame.link));
        }
        if let Some(h) = doc.nominal_base_height {
            if !h.is_finite() {
                return Err(Error::Schema("nominal_base_height must be finite".into()));
            }
        }

        let joint_origins = doc.joints.iter().map(|j| j.origin.isometry()).collect();
        Ok(Self {
            doc,
            parent_body,
            topo_order,
            body_links,
            frame_bodies,
            joint_origins,
        })
    }

    pub fn document(&self) -> &ModelDocument {
        &self.doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("model document serializes")
    }

    pub fn base_link(&self) -> &LinkSpec {
        &self.doc.base_link
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.doc.links
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.doc.joints
    }

    pub fn contact_frames(&self) -> &[ContactFrame] {
        &self.doc.contact_frames
    }

    pub fn nominal_base_height(&self) -> Option<f64> {
        self.doc.nominal_base_height
    }

    /// Number of joints.
    pub fn n(&self) -> usize {
        self.doc.joints.len()
    }

    pub fn n_act(&self) -> usize {
        self.doc.joints.iter().filter(|j| j.actuated).count()
    }

    /// Dimension of the generalized velocity, `n + 6`.
    pub fn nv(&self) -> usize {
        self.n() + BASE_DOF
    }

    /// Indices of actuated joints in document order (rows of the selection matrix).
    pub fn actuated_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.doc.joints[j].actuated).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.doc.base_link.mass + self.doc.links.iter().map(|l| l.mass).sum::<f64>()
    }

    pub fn frame_index(&self, name: &str) -> Result<usize> {
        self.doc
            .contact_frames
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFrame(name.to_string()))
    }

    pub(crate) fn body_count(&self) -> usize {
        self.doc.joints.len() + 1
    }

    pub(crate) fn body_link(&self, body: usize) -> &LinkSpec {
        if body == 0 {
            &self.doc.base_link
        } else {
            &self.doc.links[self.body_links[body]]
        }
    }

    /// Parent body of joint `j`'s child body.
    pub(crate) fn parent_body(&self, j: usize) -> usize {
        self.parent_body[j]
    }

    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub(crate) fn joint_origin(&self, j: usize) -> &Isometry3<f64> {
        &self.joint_origins[j]
    }

    pub(crate) fn frame_body(&self, frame: usize) -> usize {
        self.frame_bodies[frame]
    }

    /// Joint indices on the path from the base to `body`, leaf first.
    pub fn joints_on_path(&self, mut body: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while body != 0 {
            let j = body - 1;
            path.push(j);
            body = self.parent_body[j];
        }
        path
    }
}

/// Parses and validates a JSON robot description.
pub fn parse_model(text: &str) -> Result<RobotModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    RobotModel::from_document(doc)
}

/// Configuration and generalized velocity of a floating-base robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotState {
    /// World position of the base origin (m).
    pub base_position: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`, base to world.
    pub base_orientation: [f64; 4],
    pub joint_positions: Vec<f64>,
    /// World-frame velocity of the base origin (m/s).
    pub base_linear_velocity: [f64; 3],
    /// World-frame angular velocity (rad/s).
    pub base_angular_velocity: [f64; 3],
    pub joint_velocities: Vec<f64>,
}

impl RobotState {
    /// Zero pose, identity orientation, zero velocity.
    pub fn zero(model: &RobotModel) -> Self {
        Self {
            base_position: [0.0; 3],
            base_orientation: [1.0, 0.0, 0.0, 0.0],
            joint_positions: vec![0.0; model.n()],
            base_linear_velocity: [0.0; 3],
            base_angular_velocity: [0.0; 3],
            joint_velocities: vec![0.0; model.n()],
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.base_position)
    }

    /// Base orientation; assumes the quaternion was validated.
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.base_orientation;
        UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z))
    }

    pub fn set_rotation(&mut self, rotation: &UnitQuaternion<f64>) {
        let q = rotation.quaternion();
        self.base_orientation = [q.w, q.i, q.j, q.k];
    }

    pub fn base_pose(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position()), self.rotation())
    }

    /// Generalized velocity in the fixed `[linear; angular; joints]` layout.
    pub fn velocity(&self) -> DVector<f64> {
        let n = self.joint_velocities.len();
        let mut v = DVector::zeros(n + BASE_DOF);
        v.rows_mut(0, 3)
            .copy_from_slice(&self.base_linear_velocity);
        v.rows_mut(3, 3)
            .copy_from_slice(&self.base_angular_velocity);
        v.rows_mut(BASE_DOF, n).copy_from_slice(&self.joint_velocities);
        v
    }

    pub fn set_velocity(&mut self, v: &DVector<f64>) {
        assert_eq!(v.len(), self.joint_velocities.len() + BASE_DOF);
        self.base_linear_velocity.copy_from_slice(v.rows(0, 3).as_slice());
        self.base_angular_velocity.copy_from_slice(v.rows(3, 3).as_slice());
        let n = self.joint_velocities.len();
        self.joint_velocities
            .copy_from_slice(v.rows(BASE_DOF, n).as_slice());
    }

    /// Configuration displaced along a generalized velocity: `q ⊕ dt·v`.
    ///
    /// The base rotates about its own origin by the world-frame rotation
    /// vector `dt·ω`, which keeps finite differences consistent with the
    /// world-twist velocity layout.
    pub fn integrated(&self, v: &DVector<f64>, dt: f64) -> Self {
        let mut out = self.clone();
        for k in 0..3 {
            out.base_position[k] += dt * v[BASE_LINEAR.start + k];
        }
        let omega = Vector3::new(v[3], v[4], v[5]) * dt;
        out.set_rotation(&(UnitQuaternion::from_scaled_axis(omega) * self.rotation()));
        for (q, qd) in out.joint_positions.iter_mut().zip(v.rows(BASE_DOF, v.len() - BASE_DOF).iter()) {
            *q += dt * qd;
        }
        out
    }
}

/// Checks dimensions and quaternion norm, optionally joint limits.
pub fn validate_state(model: &RobotModel, state: &RobotState, strict: bool) -> Result<RobotState> {
    let n = model.n();
    for (what, actual) in [
        ("joint_positions", state.joint_positions.len()),
        ("joint_velocities", state.joint_velocities.len()),
    ] {
        if actual != n {
            return Err(Error::Dimension {
                what: what.into(),
                expected: n,
                actual,
            });
        }
    }
    let finite = state
        .base_position
        .iter()
        .chain(&state.base_orientation)
        .chain(&state.joint_positions)
        .chain(&state.base_linear_velocity)
        .chain(&state.base_angular_velocity)
        .chain(&state.joint_velocities)
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::Domain("state contains non-finite values".into()));
    }

    let [w, x, y, z] = state.base_orientation;
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    if norm < QUAT_DEGENERATE_NORM {
        return Err(Error::DegenerateQuaternion { norm });
    }
    if (norm - 1.0).abs() > QUAT_RENORMALIZE_TOLERANCE {
        return Err(Error::Domain(format!(
            "base quaternion norm {norm} is not within 1e-6 of unity"
        )));
    }

    if strict {
        for (joint, &q) in model.joints().iter().zip(&state.joint_positions) {
            if q < joint.lower() || q > joint.upper() {
                return Err(Error::LimitViolation {
                    joint: joint.name.clone(),
                    value: q,
                    lower: joint.lower(),
                    upper: joint.upper(),
                });
            }
        }
    }

    let mut out = state.clone();
    out.base_orientation = [w / norm, x / norm, y / norm, z / norm];
    Ok(out)
}
