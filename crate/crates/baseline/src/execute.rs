//! Open-loop execution of a timed trajectory in the simulator.

use crate::trajectory::Trajectory;
use wbc_core::env::{Env, EnvError, EpisodeResult};
use wbc_core::geometry::{wrap_angle, Vec2};
use wbc_core::robot::{nearest_level, Action, DOF};

/// Proportional gain on position error, 1/s.
pub const TRACKING_GAIN: f64 = 1.5;

/// Drives a freshly reset `env` along `traj`, then holds the final
/// configuration until the episode ends. Each tick commands the acceleration
/// level nearest to what reaches the next reference velocity plus a
/// proportional position correction.
pub fn execute(traj: &Trajectory, env: &mut Env) -> Result<EpisodeResult, EnvError> {
    if traj.is_empty() {
        return Err(EnvError::Config("cannot execute an empty trajectory".into()));
    }
    let robot = env.config().robot.clone();
    let dt = robot.control_period;
    let mut k = 0usize;
    loop {
        k += 1;
        let reference = traj.sample(k as f64 * dt);
        let s = *env.state();
        let q = [s.base.x, s.base.y, s.base.theta, s.joints[0], s.joints[1]];
        let mut err = [0.0; DOF];
        for i in 0..DOF {
            err[i] = reference.q.q[i] - q[i];
        }
        err[2] = wrap_angle(err[2]);
        let mut want = [0.0; DOF];
        for i in 0..DOF {
            want[i] = reference.vel[i] + TRACKING_GAIN * err[i];
        }
        let body = Vec2::new(want[0], want[1]).rotate(-s.base.theta);
        want[0] = body.x;
        want[1] = body.y;
        let v = s.velocities();
        let mut levels = [0u8; DOF];
        for i in 0..DOF {
            let lim = robot.vel_limits[i];
            let target = want[i].clamp(-lim, lim);
            levels[i] = nearest_level((target - v[i]) / dt, robot.acc_limits[i]);
        }
        let out = env.step(Action(levels))?;
        if let Some(result) = out.info.result {
            return Ok(result);
        }
    }
}
