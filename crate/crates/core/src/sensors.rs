//! Simulated 2D LIDAR scans with Gaussian range noise and max-range dropout.

use crate::geometry::{Pose2, Vec2};
use crate::robot::RobotState;
use crate::world::WorldModel;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Smallest range a beam can report, m.
pub const MIN_RANGE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    /// Scanner pose in the base frame.
    pub mount: Pose2,
    /// Field of view, rad.
    pub fov: f64,
    pub n_beams: usize,
    /// Saturation range, m.
    pub max_range: f64,
    /// Standard deviation of additive range noise, m.
    pub noise_sigma: f64,
    /// Per-beam probability of reporting `max_range`.
    pub dropout_prob: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self::front()
    }
}

impl LidarConfig {
    /// Front-left corner of the default base, facing forward.
    pub fn front() -> Self {
        Self {
            mount: Pose2::new(0.48, 0.395, 0.0),
            fov: 270f64.to_radians(),
            n_beams: 64,
            max_range: 5.0,
            noise_sigma: 0.01,
            dropout_prob: 0.02,
        }
    }

    /// Rear-right corner of the default base, facing backward.
    pub fn rear() -> Self {
        Self { mount: Pose2::new(-0.48, -0.395, PI), ..Self::front() }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self.dropout_prob = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), InvalidLidar> {
        if self.n_beams < 2 {
            return Err(InvalidLidar("n_beams must be at least 2".into()));
        }
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI) {
            return Err(InvalidLidar("fov must lie in (0, 2pi]".into()));
        }
        if !(self.max_range.is_finite() && self.max_range > MIN_RANGE) {
            return Err(InvalidLidar("max_range must exceed the minimum range".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(InvalidLidar("noise_sigma must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(InvalidLidar("dropout_prob must lie in [0, 1]".into()));
        }
        if !(self.mount.x.is_finite() && self.mount.y.is_finite() && self.mount.theta.is_finite()) {
            return Err(InvalidLidar("mount pose must be finite".into()));
        }
        Ok(())
    }

    /// Bearing of beam `i` relative to the scanner.
    pub fn beam_offset(&self, i: usize) -> f64 {
        self.fov * (i as f64 / (self.n_beams - 1) as f64 - 0.5)
    }

    /// World pose of the scanner for a given base pose.
    pub fn world_pose(&self, base: &Pose2) -> Pose2 {
        base.compose(&self.mount)
    }
}

#[derive(Debug, Error)]
#[error("invalid lidar config: {0}")]
pub struct InvalidLidar(pub String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    /// Ranges ordered by bearing, each in `(0, max_range]`.
    pub ranges: Vec<f64>,
}

pub fn simulate_scan(world: &WorldModel, s: &RobotState, cfg: &LidarConfig, rng: &mut impl Rng) -> Scan {
    let mut ranges = vec![0.0; cfg.n_beams];
    simulate_scan_into(world, s, cfg, rng, &mut ranges);
    Scan { ranges }
}

/// Fills `out` (length `n_beams`) without allocating.
pub fn simulate_scan_into(world: &WorldModel, s: &RobotState, cfg: &LidarConfig, rng: &mut impl Rng, out: &mut [f64]) {
    debug_assert_eq!(out.len(), cfg.n_beams);
    let pose = cfg.world_pose(&s.base);
    let origin = pose.position();
    for (i, r) in out.iter_mut().enumerate() {
        let dir = Vec2::from_angle(pose.theta + cfg.beam_offset(i));
        let mut range = world.raycast(origin, dir, cfg.max_range);
        if cfg.noise_sigma > 0.0 {
            let n: f64 = rng.sample(StandardNormal);
            range += cfg.noise_sigma * n;
        }
        range = range.clamp(MIN_RANGE, cfg.max_range);
        if cfg.dropout_prob > 0.0 && rng.random::<f64>() < cfg.dropout_prob {
            range = cfg.max_range;
        }
        *r = range;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Ellipse, OrientedBox};
    use crate::world::{Line, Obstacle};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world(obstacles: Vec<Obstacle>) -> WorldModel {
        WorldModel {
            obstacles,
            corridor_axis: Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
            corridor_width: 2.0,
            goal_region: OrientedBox { center: Vec2::new(1.0, 0.0), half_extents: Vec2::new(0.1, 0.1), yaw: 0.0 },
            spawn_region: Ellipse { center: Vec2::ZERO, semi_axes: Vec2::new(0.2, 0.2) },
            spawn_heading: 0.0,
            spawn_heading_spread: 0.0,
            bounds: Aabb::new(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0)),
        }
    }

    fn box_world() -> WorldModel {
        world(vec![
            Obstacle::wall(Vec2::new(-3.0, 1.5), Vec2::new(3.0, 1.5)),
            Obstacle::wall(Vec2::new(-3.0, -1.2), Vec2::new(3.0, -1.2)),
            Obstacle::wall(Vec2::new(2.5, -3.0), Vec2::new(2.5, 3.0)),
        ])
    }

    #[test]
    fn empty_world_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = simulate_scan(&world(vec![]), &RobotState::default(), &LidarConfig::front().noiseless(), &mut rng);
        assert!(scan.ranges.iter().all(|&r| r == 5.0));
    }

    #[test]
    fn noiseless_scan_equals_raycast() {
        let w = box_world();
        let cfg = LidarConfig::rear().noiseless();
        let s = RobotState::at_rest(Pose2::new(0.3, 0.1, 0.4), [0.0; 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scan = simulate_scan(&w, &s, &cfg, &mut rng);
        let pose = cfg.world_pose(&s.base);
        for (i, &r) in scan.ranges.iter().enumerate() {
            let dir = Vec2::from_angle(pose.theta + cfg.beam_offset(i));
            assert_eq!(r, w.raycast(pose.position(), dir, 5.0));
        }
    }

    #[test]
    fn full_dropout_saturates() {
        let cfg = LidarConfig { dropout_prob: 1.0, ..LidarConfig::front() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let scan = simulate_scan(&box_world(), &RobotState::default(), &cfg, &mut rng);
        assert!(scan.ranges.iter().all(|&r| r == 5.0));
    }

    #[test]
    fn ranges_stay_in_bounds() {
        let cfg = LidarConfig { noise_sigma: 0.5, ..LidarConfig::front() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..50 {
            let s = RobotState::at_rest(Pose2::new(0.0, 0.0, k as f64 * 0.3), [0.0; 2]);
            let scan = simulate_scan(&box_world(), &s, &cfg, &mut rng);
            assert!(scan.ranges.iter().all(|&r| r > 0.0 && r <= 5.0));
        }
    }

    #[test]
    fn beam_bearings_span_fov() {
        let cfg = LidarConfig::front();
        assert!((cfg.beam_offset(0) + cfg.fov / 2.0).abs() < 1e-15);
        assert!((cfg.beam_offset(63) - cfg.fov / 2.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        assert!(LidarConfig { n_beams: 1, ..LidarConfig::front() }.validate().is_err());
        assert!(LidarConfig { fov: 7.0, ..LidarConfig::front() }.validate().is_err());
        assert!(LidarConfig { dropout_prob: 1.5, ..LidarConfig::front() }.validate().is_err());
        assert!(LidarConfig::rear().validate().is_ok());
    }
}
