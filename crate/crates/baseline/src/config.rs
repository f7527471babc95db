//! Configuration-space points, the weighted metric and straight-line
//! interpolation.

use serde::{Deserialize, Serialize};
use wbc_core::geometry::{wrap_angle, Pose2};
use wbc_core::robot::{collision_shapes, joint_limits_violated, RobotParams, RobotState, DOF};
use wbc_core::world::WorldModel;

/// `(x_b, y_b, theta_b, phi1, phi2)` in meters and radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config5D {
    pub q: [f64; DOF],
}

impl Config5D {
    pub const fn new(q: [f64; DOF]) -> Self {
        Self { q }
    }

    pub fn from_state(s: &RobotState) -> Self {
        Self::new([s.base.x, s.base.y, s.base.theta, s.joints[0], s.joints[1]])
    }

    /// The configuration at rest.
    pub fn to_state(&self) -> RobotState {
        RobotState::at_rest(Pose2::new(self.q[0], self.q[1], self.q[2]), [self.q[3], self.q[4]])
    }

    /// Componentwise displacement to `other`; the heading takes the short way
    /// round.
    pub fn delta(&self, other: &Config5D) -> [f64; DOF] {
        let mut d = [0.0; DOF];
        for i in 0..DOF {
            d[i] = other.q[i] - self.q[i];
        }
        d[2] = wrap_angle(d[2]);
        d
    }

    pub fn interpolate(&self, other: &Config5D, t: f64) -> Config5D {
        let d = self.delta(other);
        let mut q = self.q;
        for i in 0..DOF {
            q[i] += d[i] * t;
        }
        q[2] = wrap_angle(q[2]);
        Config5D { q }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite())
    }
}

/// Weighted Euclidean metric. The heading is scaled by half the base diagonal
/// and the joints by the arm reach so one radian costs about what the
/// corresponding point sweep does.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub weights: [f64; DOF],
}

impl Metric {
    pub fn for_robot(p: &RobotParams) -> Self {
        let w_theta = p.base_half_extents.norm();
        let w_arm = p.reach();
        Self { weights: [1.0, 1.0, w_theta, w_arm, w_arm] }
    }

    pub fn distance(&self, a: &Config5D, b: &Config5D) -> f64 {
        let d = a.delta(b);
        d.iter().zip(&self.weights).map(|(x, w)| (x * w) * (x * w)).sum::<f64>().sqrt()
    }

    pub fn path_length(&self, path: &[Config5D]) -> f64 {
        path.windows(2).map(|w| self.distance(&w[0], &w[1])).sum()
    }
}

/// Validity test shared by the planner, the goal sampler and the smoother.
#[derive(Clone, Debug)]
pub struct Validity<'a> {
    pub world: &'a WorldModel,
    pub robot: &'a RobotParams,
    /// Required obstacle clearance, m.
    pub margin: f64,
}

impl Validity<'_> {
    pub fn config_ok(&self, c: &Config5D) -> bool {
        let s = c.to_state();
        if !c.is_finite() || joint_limits_violated(&s, self.robot) {
            return false;
        }
        let b = &self.world.bounds;
        if c.q[0] < b.min.x || c.q[0] > b.max.x || c.q[1] < b.min.y || c.q[1] > b.max.y {
            return false;
        }
        let clearance = self.world.min_clearance(&collision_shapes(&s, self.robot));
        clearance > 0.0 && clearance >= self.margin
    }

    /// Checks the straight edge at spacing `resolution` under `metric`,
    /// excluding the start point.
    pub fn edge_ok(&self, a: &Config5D, b: &Config5D, metric: &Metric, resolution: f64) -> bool {
        let n = (metric.distance(a, b) / resolution).ceil().max(1.0) as usize;
        (1..=n).all(|i| self.config_ok(&a.interpolate(b, i as f64 / n as f64)))
    }
}
