//! Time parameterization: every segment follows one trapezoidal velocity
//! profile shared by all dimensions, starting and ending at rest.
//!
//! The base limits are body-frame while trajectories are world-frame, so
//! planar translation is limited by its speed rather than per axis.

use crate::config::Config5D;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wbc_core::robot::{RobotParams, DOF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub vel: [f64; DOF],
    pub acc: [f64; DOF],
}

impl Limits {
    pub fn for_robot(p: &RobotParams) -> Self {
        Self { vel: p.vel_limits, acc: p.acc_limits }
    }
}

/// Trapezoid for a unit displacement: peak rate `rate` (1/s) and
/// acceleration `accel` (1/s^2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub rate: f64,
    pub accel: f64,
    pub duration: f64,
}

impl Profile {
    /// Fastest profile with peak rate at most `rate` and acceleration `accel`.
    pub fn new(rate: f64, accel: f64) -> Self {
        let rate = rate.min(accel.sqrt());
        Self { rate, accel, duration: 1.0 / rate + rate / accel }
    }

    /// Position, rate and acceleration at `t` in `[0, duration]`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(0.0, self.duration);
        let ta = self.rate / self.accel;
        if t < ta {
            (0.5 * self.accel * t * t, self.accel * t, self.accel)
        } else if t <= self.duration - ta {
            (0.5 * self.accel * ta * ta + self.rate * (t - ta), self.rate, 0.0)
        } else {
            let r = self.duration - t;
            (1.0 - 0.5 * self.accel * r * r, self.accel * r, -self.accel)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Config5D>,
    /// Arrival time at each waypoint, s; starts at 0.
    pub times: Vec<f64>,
    /// One profile per segment.
    pub profiles: Vec<Profile>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory has {waypoints} waypoints, {times} times and {profiles} profiles")]
    Length { waypoints: usize, times: usize, profiles: usize },
    #[error("non-finite value in trajectory")]
    NonFinite,
    #[error("segment {0} timing is inconsistent with its profile")]
    Timing(usize),
}

/// A sampled point: configuration, velocity and acceleration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub q: Config5D,
    pub vel: [f64; DOF],
    pub acc: [f64; DOF],
}

/// Assigns times to `path`. Consecutive duplicates are dropped; an empty or
/// single-point path yields a zero-duration trajectory.
pub fn time_parameterize(path: &[Config5D], limits: &Limits) -> Trajectory {
    let mut waypoints: Vec<Config5D> = Vec::with_capacity(path.len());
    for c in path {
        if waypoints.last().is_none_or(|w| w.delta(c).iter().any(|d| d.abs() > 1e-12)) {
            waypoints.push(*c);
        }
    }
    let mut times = Vec::with_capacity(waypoints.len());
    let mut profiles = Vec::with_capacity(waypoints.len().saturating_sub(1));
    if !waypoints.is_empty() {
        times.push(0.0);
    }
    for w in waypoints.windows(2) {
        let d = w[0].delta(&w[1]);
        let mut rate = f64::INFINITY;
        let mut accel = f64::INFINITY;
        // Planar translation is bounded by its norm so the body-frame
        // components stay within limits at any heading.
        let planar = d[0].hypot(d[1]);
        if planar > 0.0 {
            rate = limits.vel[0].min(limits.vel[1]) / planar;
            accel = limits.acc[0].min(limits.acc[1]) / planar;
        }
        for i in 2..DOF {
            if d[i] != 0.0 {
                rate = rate.min(limits.vel[i] / d[i].abs());
                accel = accel.min(limits.acc[i] / d[i].abs());
            }
        }
        let p = Profile::new(rate, accel);
        times.push(times.last().expect("nonempty") + p.duration);
        profiles.push(p);
    }
    Trajectory { waypoints, times, profiles }
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Clamps `t` to the trajectory span. Panics on an empty trajectory.
    pub fn sample(&self, t: f64) -> TrajectoryPoint {
        let last = *self.waypoints.last().expect("empty trajectory");
        if self.profiles.is_empty() || t >= self.duration() {
            return TrajectoryPoint { q: last, vel: [0.0; DOF], acc: [0.0; DOF] };
        }
        let k = self.times.partition_point(|&tk| tk <= t).saturating_sub(1).min(self.profiles.len() - 1);
        let (s, ds, dds) = self.profiles[k].eval(t - self.times[k]);
        let (a, b) = (&self.waypoints[k], &self.waypoints[k + 1]);
        let d = a.delta(b);
        TrajectoryPoint {
            q: a.interpolate(b, s),
            vel: d.map(|x| x * ds),
            acc: d.map(|x| x * dds),
        }
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let (n, nt, np) = (self.waypoints.len(), self.times.len(), self.profiles.len());
        if nt != n || np != n.saturating_sub(1) {
            return Err(TrajectoryError::Length { waypoints: n, times: nt, profiles: np });
        }
        let finite = self.waypoints.iter().all(|w| w.is_finite())
            && self.times.iter().all(|t| t.is_finite())
            && self.profiles.iter().all(|p| p.rate.is_finite() && p.accel.is_finite() && p.duration.is_finite());
        if !finite {
            return Err(TrajectoryError::NonFinite);
        }
        if self.times.first().is_some_and(|&t| t != 0.0) {
            return Err(TrajectoryError::Timing(0));
        }
        for (k, p) in self.profiles.iter().enumerate() {
            let expected = Profile::new(p.rate, p.accel);
            let span = self.times[k + 1] - self.times[k];
            let ok = p.rate > 0.0
                && p.accel > 0.0
                && (expected.rate - p.rate).abs() <= 1e-9 * p.rate
                && (expected.duration - p.duration).abs() <= 1e-9 * p.duration.max(1.0)
                && (span - p.duration).abs() <= 1e-9 * p.duration.max(1.0);
            if !ok {
                return Err(TrajectoryError::Timing(k));
            }
        }
        Ok(())
    }
}
