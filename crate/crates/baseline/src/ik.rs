//! Goal configurations from planar two-link inverse kinematics.

use crate::config::{Config5D, Validity};
use rand::Rng;
use std::f64::consts::PI;
use wbc_core::geometry::{wrap_angle, Pose2, Vec2};
use wbc_core::robot::{forward_kinematics, RobotParams};

/// Sampling attempts per requested configuration.
pub const ATTEMPTS_PER_GOAL: usize = 400;

/// Joint solutions placing the end effector at `target` for a fixed base.
/// Two solutions (elbow up and down) inside the workspace, one at full
/// extension or full fold, none outside. Joint limits are not applied.
pub fn solve_planar_ik(base: &Pose2, target: Vec2, p: &RobotParams) -> Vec<[f64; 2]> {
    let [l1, l2] = p.link_lengths;
    let mount = base.transform_point(p.arm_mount_offset);
    let rel = target - mount;
    let d2 = rel.norm_sq();
    let c2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    const SLACK: f64 = 1e-9;
    if !(-1.0 - SLACK..=1.0 + SLACK).contains(&c2) {
        return Vec::new();
    }
    let c2 = c2.clamp(-1.0, 1.0);
    let heading = rel.y.atan2(rel.x) - base.theta;
    let solution = |phi2: f64| {
        let phi1 = heading - (l2 * phi2.sin()).atan2(l1 + l2 * phi2.cos());
        [wrap_angle(phi1), phi2]
    };
    let phi2 = c2.acos();
    if phi2 == 0.0 || phi2 == PI {
        vec![solution(phi2)]
    } else {
        vec![solution(phi2), solution(-phi2)]
    }
}

/// Up to `n` valid configurations with the end effector within `tol` of
/// `target`. Base poses are drawn so the arm mount lies in the reachable
/// annulus around the target; gives up after `n * ATTEMPTS_PER_GOAL` draws.
pub fn ik_goal_configs(
    check: &Validity<'_>,
    target: Vec2,
    tol: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<Config5D> {
    assert!(tol > 0.0, "tolerance must be positive");
    let p = check.robot;
    let [l1, l2] = p.link_lengths;
    let r_min = (l1 - l2).abs();
    let r_max = l1 + l2;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n * ATTEMPTS_PER_GOAL {
        if out.len() == n {
            break;
        }
        // Uniform over the annulus area.
        let r = (r_min * r_min + rng.random::<f64>() * (r_max * r_max - r_min * r_min)).sqrt();
        let a = rng.random_range(-PI..PI);
        let theta = rng.random_range(-PI..PI);
        let mount = target + Vec2::from_angle(a) * r;
        let center = mount - p.arm_mount_offset.rotate(theta);
        let base = Pose2::new(center.x, center.y, theta);
        let sols = solve_planar_ik(&base, target, p);
        if sols.is_empty() {
            continue;
        }
        let [phi1, phi2] = sols[rng.random_range(0..sols.len())];
        let c = Config5D::new([base.x, base.y, base.theta, phi1, phi2]);
        let ee = forward_kinematics(&c.to_state(), p).position();
        if ee.dist(target) <= tol && check.config_ok(&c) {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_extension_is_unique() {
        let p = RobotParams::default();
        let base = Pose2::new(1.0, 2.0, 0.4);
        let target = base.transform_point(p.arm_mount_offset + Vec2::new(p.reach(), 0.0));
        let sols = solve_planar_ik(&base, target, &p);
        assert_eq!(sols.len(), 1);
        assert!(sols[0][1].abs() < 1e-6 && sols[0][0].abs() < 1e-6);
    }

    #[test]
    fn out_of_reach_has_no_solution() {
        let p = RobotParams::default();
        let base = Pose2::new(0.0, 0.0, 0.0);
        assert!(solve_planar_ik(&base, Vec2::new(5.0, 0.0), &p).is_empty());
    }

    #[test]
    fn both_elbows_reach_the_target() {
        let p = RobotParams::default();
        let base = Pose2::new(0.3, -0.2, 1.1);
        let target = Vec2::new(0.4, 0.5);
        let sols = solve_planar_ik(&base, target, &p);
        assert_eq!(sols.len(), 2);
        for [a, b] in sols {
            let s = wbc_core::robot::RobotState::at_rest(base, [a, b]);
            assert!(forward_kinematics(&s, &p).position().dist(target) < 1e-12);
        }
    }
}
