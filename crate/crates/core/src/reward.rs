//! Per-step shaped reward with holding-reward bookkeeping.

use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// Per-step signed change of the path deviation.
    #[default]
    Signed,
    /// Current deviation times the control period.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Total time penalty over a full episode (w_t).
    pub time_weight: f64,
    /// Episode timeout T_t, s.
    pub timeout: f64,
    /// Path deviation weight w_pd, 1/m.
    pub deviation_weight: f64,
    /// Total reward for traversing the whole reference path (w_pt).
    pub progress_weight: f64,
    /// Safety margin weight w_sm, 1/m.
    pub safety_weight: f64,
    /// Safety margin threshold d_th, m.
    pub safety_threshold: f64,
    /// Holding reward for time spent in the tolerance sphere (w_ht).
    pub hold_time_weight: f64,
    /// Holding reward for goal proximity (w_hd).
    pub hold_distance_weight: f64,
    /// Required holding duration T_h, s.
    pub hold_time: f64,
    /// Control period tau, s.
    pub control_period: f64,
    /// Terminal penalty for a collision (D_c).
    pub collision_penalty: f64,
    /// Terminal penalty for a joint limit violation (D_l).
    pub joint_limit_penalty: f64,
    /// Terminal bonus for a completed hold (D_h).
    pub hold_bonus: f64,
    /// Measure the safety margin for the base only instead of the full robot.
    pub safety_margin_base_only: bool,
    pub deviation_mode: DeviationMode,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            time_weight: -15.0,
            timeout: 120.0,
            deviation_weight: -10.0,
            progress_weight: 30.0,
            safety_weight: -1.0,
            safety_threshold: 0.3,
            hold_time_weight: 20.0,
            hold_distance_weight: 40.0,
            hold_time: 1.5,
            control_period: 0.04,
            collision_penalty: -60.0,
            joint_limit_penalty: -20.0,
            hold_bonus: 10.0,
            safety_margin_base_only: true,
            deviation_mode: DeviationMode::Signed,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("timeout", self.timeout),
            ("hold_time", self.hold_time),
            ("control_period", self.control_period),
            ("safety_threshold", self.safety_threshold),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Number of control steps before a timeout: `T_t / tau`, rounded.
    pub fn episode_steps(&self) -> usize {
        (self.timeout / self.control_period).round() as usize
    }

    /// Consecutive in-sphere steps needed for a hold: `ceil(T_h / tau)`.
    pub fn hold_steps(&self) -> usize {
        (self.hold_time / self.control_period - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    #[default]
    None,
    Collision,
    JointLimit,
    HoldSuccess,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepContext {
    /// Signed change of path deviation this step, or the current deviation
    /// under [`DeviationMode::Absolute`], m.
    pub deviation: f64,
    /// Progress along the reference path this step, m.
    pub progress: f64,
    /// Initial reference path length, m.
    pub path_length: f64,
    /// World-frame base linear velocity, m/s.
    pub base_velocity: Vec2,
    /// Smallest obstacle distance, m.
    pub clearance: f64,
    /// End-effector to goal distance, m.
    pub goal_distance: f64,
    /// Current tolerance sphere radius, m.
    pub tolerance: f64,
    pub in_sphere: bool,
    pub termination: Termination,
    /// Holding reward accumulated before this step.
    pub hold_accumulated: f64,
}

/// One column per reward component.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub time: f64,
    pub deviation: f64,
    pub progress: f64,
    pub safety: f64,
    pub holding: f64,
    pub collision: f64,
    pub joint_limit: f64,
    pub hold_success: f64,
    pub revoked: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.time
            + self.deviation
            + self.progress
            + self.safety
            + self.holding
            + self.collision
            + self.joint_limit
            + self.hold_success
            + self.revoked
    }

    pub fn accumulate(&mut self, o: &RewardTerms) {
        self.time += o.time;
        self.deviation += o.deviation;
        self.progress += o.progress;
        self.safety += o.safety;
        self.holding += o.holding;
        self.collision += o.collision;
        self.joint_limit += o.joint_limit;
        self.hold_success += o.hold_success;
        self.revoked += o.revoked;
    }
}

/// `1 - min(1, x / y)` for `y > 0`.
pub fn shaping(x: f64, y: f64) -> f64 {
    debug_assert!(y > 0.0, "shaping scale must be positive");
    1.0 - (x / y).min(1.0)
}

/// Evaluates one step; returns the decomposed reward and the new holding
/// accumulator.
pub fn step_reward(ctx: &StepContext, p: &RewardParams) -> (RewardTerms, f64) {
    let tau = p.control_period;
    let mut t = RewardTerms {
        time: p.time_weight * tau / p.timeout,
        deviation: p.deviation_weight * ctx.deviation,
        progress: p.progress_weight * ctx.progress / ctx.path_length,
        safety: p.safety_weight * ctx.base_velocity.norm() * tau * shaping(ctx.clearance, p.safety_threshold),
        ..RewardTerms::default()
    };
    let hold_new = if ctx.in_sphere {
        t.holding = (p.hold_time_weight + p.hold_distance_weight * shaping(ctx.goal_distance, ctx.tolerance)) * tau
            / p.hold_time;
        ctx.hold_accumulated + t.holding
    } else {
        if ctx.hold_accumulated > 0.0 {
            t.revoked = -ctx.hold_accumulated;
        }
        0.0
    };
    match ctx.termination {
        Termination::Collision => t.collision = p.collision_penalty,
        Termination::JointLimit => t.joint_limit = p.joint_limit_penalty,
        Termination::HoldSuccess => t.hold_success = p.hold_bonus,
        Termination::None | Termination::Timeout => {}
    }
    (t, hold_new)
}
