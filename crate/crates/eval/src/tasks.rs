//! The four evaluation scenes, ordered by clutter.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wbc_core::env::EnvConfig;
use wbc_core::world::{WorldError, WorldModel};

/// Setpoint tolerance used for every evaluation run, m.
pub const EVAL_TOLERANCE: f64 = 0.07;
/// Execution timeout for every evaluation run, s.
pub const EVAL_TIMEOUT: f64 = 180.0;

const FIXTURES: [&str; 4] = [
    include_str!("../fixtures/task1.json"),
    include_str!("../fixtures/task2.json"),
    include_str!("../fixtures/task3.json"),
    include_str!("../fixtures/task4.json"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: u32,
    pub name: String,
    pub world: WorldModel,
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("unknown task id {0}; tasks are 1-4")]
    UnknownTask(u32),
    #[error("malformed task JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    World(#[from] WorldError),
}

impl TaskSpec {
    pub fn builtin(id: u32) -> Result<Self, TaskError> {
        let text = FIXTURES.get((id as usize).wrapping_sub(1)).ok_or(TaskError::UnknownTask(id))?;
        Self::from_json(text)
    }

    pub fn all() -> Vec<Self> {
        (1..=4).map(|id| Self::builtin(id).expect("bundled fixtures are valid")).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, TaskError> {
        let t: TaskSpec = serde_json::from_str(text)?;
        t.world.validate()?;
        Ok(t)
    }

    pub fn tolerance(&self) -> f64 {
        EVAL_TOLERANCE
    }

    pub fn timeout(&self) -> f64 {
        EVAL_TIMEOUT
    }

    /// `base` with this task's layout and the evaluation timeout.
    pub fn env_config(&self, base: &EnvConfig) -> EnvConfig {
        let mut cfg = base.clone();
        cfg.scenario.fixed_layout = Some(self.world.clone());
        cfg.options.max_episode_steps = Some((EVAL_TIMEOUT / cfg.robot.control_period).round() as usize);
        cfg
    }
}
