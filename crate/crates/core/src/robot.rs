//! Holonomic base with a two-joint planar arm.
//!
//! Dimension order everywhere is `(x_b, y_b, theta_b, phi1, phi2)`. Base
//! velocities are expressed in the body frame.

use crate::geometry::{wrap_angle, OrientedBox, Pose2, Shape, Vec2};
use crate::world::{BodyShape, Layer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DOF: usize = 5;
pub const N_LEVELS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// Half length and half width of the base rectangle, m.
    pub base_half_extents: Vec2,
    /// Arm mount point in the base frame, m.
    pub arm_mount_offset: Vec2,
    /// Link lengths l1, l2, m.
    pub link_lengths: [f64; 2],
    /// Capsule radius of both links, m.
    pub link_radius: f64,
    /// Closed `[min, max]` interval per joint, rad.
    pub joint_pos_limits: [[f64; 2]; 2],
    /// Velocity bounds (m/s, m/s, rad/s, rad/s, rad/s).
    pub vel_limits: [f64; DOF],
    /// Acceleration bounds (m/s^2, m/s^2, rad/s^2, rad/s^2, rad/s^2).
    pub acc_limits: [f64; DOF],
    /// Control period, s.
    pub control_period: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            base_half_extents: Vec2::new(0.48, 0.395),
            arm_mount_offset: Vec2::new(0.24, 0.0),
            link_lengths: [0.316, 0.30],
            link_radius: 0.06,
            joint_pos_limits: [[-2.8, 2.8], [-2.8, 2.8]],
            vel_limits: [0.1, 0.1, 0.2, 0.5, 0.5],
            acc_limits: [0.15, 0.15, 0.3, 0.8, 0.8],
            control_period: 0.04,
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid robot parameters: {0}")]
pub struct InvalidParams(pub String);

impl RobotParams {
    pub fn validate(&self) -> Result<(), InvalidParams> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.base_half_extents.x) && pos(self.base_half_extents.y)) {
            return Err(InvalidParams("base_half_extents must be positive".into()));
        }
        if !self.link_lengths.iter().all(|&l| pos(l)) || !pos(self.link_radius) {
            return Err(InvalidParams("link lengths and radius must be positive".into()));
        }
        if !self.vel_limits.iter().chain(&self.acc_limits).all(|&l| pos(l)) || !pos(self.control_period) {
            return Err(InvalidParams("limits and control period must be positive".into()));
        }
        if !self.joint_pos_limits.iter().all(|l| l[0].is_finite() && l[1].is_finite() && l[0] < l[1]) {
            return Err(InvalidParams("joint_pos_limits must satisfy min < max".into()));
        }
        Ok(())
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths[0] + self.link_lengths[1]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    /// World-frame base pose.
    pub base: Pose2,
    /// Body-frame base velocity `(vx, vy, omega)`.
    pub base_vel: [f64; 3],
    pub joints: [f64; 2],
    pub joint_vel: [f64; 2],
}

impl RobotState {
    pub fn at_rest(base: Pose2, joints: [f64; 2]) -> Self {
        Self { base, base_vel: [0.0; 3], joints, joint_vel: [0.0; 2] }
    }

    pub fn velocities(&self) -> [f64; DOF] {
        [self.base_vel[0], self.base_vel[1], self.base_vel[2], self.joint_vel[0], self.joint_vel[1]]
    }

    /// World-frame linear velocity of the base.
    pub fn base_world_velocity(&self) -> Vec2 {
        Vec2::new(self.base_vel[0], self.base_vel[1]).rotate(self.base.theta)
    }
}

/// One discretized acceleration level per dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action(pub [u8; DOF]);

#[derive(Debug, Error, PartialEq)]
#[error("action index {index} on dimension {dim} is outside 0..5")]
pub struct InvalidAction {
    pub dim: usize,
    pub index: u8,
}

impl Action {
    pub const IDLE: Action = Action([2; DOF]);

    pub fn new(indices: [u8; DOF]) -> Result<Self, InvalidAction> {
        for (dim, &index) in indices.iter().enumerate() {
            if index as usize >= N_LEVELS {
                return Err(InvalidAction { dim, index });
            }
        }
        Ok(Action(indices))
    }

    /// Maps a flat index in `0..5^5` to an action, first dimension most significant.
    pub fn from_flat(mut k: usize) -> Self {
        let mut idx = [0u8; DOF];
        for slot in idx.iter_mut().rev() {
            *slot = (k % N_LEVELS) as u8;
            k /= N_LEVELS;
        }
        Action(idx)
    }
}

/// Linear levels `{-A, -A/2, 0, A/2, A}`.
pub fn action_to_accels(a: &Action, p: &RobotParams) -> [f64; DOF] {
    let mut out = [0.0; DOF];
    for (i, o) in out.iter_mut().enumerate() {
        *o = level_value(a.0[i], p.acc_limits[i]);
    }
    out
}

pub fn level_value(index: u8, limit: f64) -> f64 {
    (index as f64 - 2.0) * 0.5 * limit
}

/// Index of the level closest to `acc`; ties go to the level nearer zero.
pub fn nearest_level(acc: f64, limit: f64) -> u8 {
    let x = (acc / (0.5 * limit)).clamp(-2.0, 2.0);
    let k = if x >= 0.0 { (x - 0.5).ceil() } else { (x + 0.5).floor() };
    (k as i32 + 2) as u8
}

/// One semi-implicit Euler step of length `control_period`.
pub fn integrate(s: &RobotState, acc: &[f64; DOF], p: &RobotParams) -> RobotState {
    let dt = p.control_period;
    let mut v = s.velocities();
    for i in 0..DOF {
        let lim = p.vel_limits[i];
        v[i] = (v[i] + acc[i] * dt).clamp(-lim, lim);
    }
    let world_v = Vec2::new(v[0], v[1]).rotate(s.base.theta);
    RobotState {
        base: Pose2::new(
            s.base.x + world_v.x * dt,
            s.base.y + world_v.y * dt,
            wrap_angle(s.base.theta + v[2] * dt),
        ),
        base_vel: [v[0], v[1], v[2]],
        joints: [s.joints[0] + v[3] * dt, s.joints[1] + v[4] * dt],
        joint_vel: [v[3], v[4]],
    }
}

/// World positions of the arm mount, the elbow and the end effector.
pub fn arm_points(s: &RobotState, p: &RobotParams) -> [Vec2; 3] {
    let mount = s.base.transform_point(p.arm_mount_offset);
    let a1 = s.base.theta + s.joints[0];
    let elbow = mount + Vec2::from_angle(a1) * p.link_lengths[0];
    let ee = elbow + Vec2::from_angle(a1 + s.joints[1]) * p.link_lengths[1];
    [mount, elbow, ee]
}

/// End-effector pose in the world frame. The heading is not wrapped.
pub fn forward_kinematics(s: &RobotState, p: &RobotParams) -> Pose2 {
    let ee = arm_points(s, p)[2];
    Pose2::new(ee.x, ee.y, s.base.theta + s.joints[0] + s.joints[1])
}

/// Base rectangle plus one capsule per link.
pub fn collision_shapes(s: &RobotState, p: &RobotParams) -> [BodyShape; 3] {
    let [mount, elbow, ee] = arm_points(s, p);
    [
        base_shape(s, p),
        BodyShape { shape: Shape::Capsule { a: mount, b: elbow, radius: p.link_radius }, layer: Layer::Arm },
        BodyShape { shape: Shape::Capsule { a: elbow, b: ee, radius: p.link_radius }, layer: Layer::Arm },
    ]
}

pub fn base_shape(s: &RobotState, p: &RobotParams) -> BodyShape {
    BodyShape {
        shape: Shape::Rect(OrientedBox {
            center: s.base.position(),
            half_extents: p.base_half_extents,
            yaw: s.base.theta,
        }),
        layer: Layer::Base,
    }
}

pub fn world_to_ee_frame(s: &RobotState, p: &RobotParams, pt: Vec2) -> Vec2 {
    forward_kinematics(s, p).inverse_transform_point(pt)
}

pub fn ee_to_world_frame(s: &RobotState, p: &RobotParams, pt: Vec2) -> Vec2 {
    forward_kinematics(s, p).transform_point(pt)
}

/// Closed-interval check.
pub fn joint_limits_violated(s: &RobotState, p: &RobotParams) -> bool {
    s.joints
        .iter()
        .zip(&p.joint_pos_limits)
        .any(|(&q, lim)| q < lim[0] || q > lim[1])
}
