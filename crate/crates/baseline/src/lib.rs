//! Sampling-based baseline: inverse-kinematics goal sampling, RRT-Connect,
//! trapezoidal time parameterization and tracking execution.

pub mod config;
pub mod execute;
pub mod ik;
pub mod rrt;
pub mod trajectory;

pub use config::{Config5D, Metric, Validity};
pub use execute::execute;
pub use rrt::{plan_rrt_connect, plan_to_setpoint, PlanError, PlanResult, PlannerParams};
pub use trajectory::{time_parameterize, Limits, Trajectory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A plan as written to disk: planner bookkeeping plus the timed trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub planning_time: f64,
    pub attempts_used: u32,
    pub trajectory: Trajectory,
}

#[derive(Debug, Error)]
pub enum PlanFileError {
    #[error("malformed plan JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Trajectory(#[from] trajectory::TrajectoryError),
    #[error("planning time must be finite and nonnegative")]
    PlanningTime,
}

impl PlanFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PlanFileError> {
        let p: PlanFile = serde_json::from_str(text)?;
        if !(p.planning_time.is_finite() && p.planning_time >= 0.0) {
            return Err(PlanFileError::PlanningTime);
        }
        p.trajectory.validate()?;
        Ok(p)
    }
}
