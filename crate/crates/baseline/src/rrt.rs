//! Bidirectional RRT (RRT-Connect) over the full configuration space.

use crate::config::{Config5D, Metric, Validity};
use crate::ik::ik_goal_configs;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;
use thiserror::Error;
use wbc_core::geometry::Vec2;
use wbc_core::robot::{RobotParams, DOF};
use wbc_core::world::WorldModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Extension step in metric units.
    pub step: f64,
    /// Edge collision-check spacing in metric units.
    pub resolution: f64,
    /// Independent restarts with fresh trees.
    pub attempts: u32,
    /// Tree expansions per attempt.
    pub max_iterations: usize,
    /// Wall-clock budget over all attempts, s.
    pub time_budget: f64,
    /// Goal configurations requested from the IK sampler.
    pub n_goals: usize,
    /// End-effector tolerance of goal configurations, m.
    pub goal_tolerance: f64,
    /// Obstacle clearance every configuration must keep, m.
    pub clearance_margin: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            step: 0.3,
            resolution: 0.01,
            attempts: 20,
            max_iterations: 5000,
            time_budget: 180.0,
            n_goals: 10,
            goal_tolerance: 0.01,
            clearance_margin: 0.03,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.step) && pos(self.resolution) && pos(self.time_budget) && pos(self.goal_tolerance)) {
            return Err(PlanError::InvalidParams("step, resolution, time_budget and goal_tolerance must be positive".into()));
        }
        if self.attempts == 0 || self.max_iterations == 0 || self.n_goals == 0 {
            return Err(PlanError::InvalidParams("attempts, max_iterations and n_goals must be nonzero".into()));
        }
        if !(self.clearance_margin >= 0.0 && self.clearance_margin.is_finite()) {
            return Err(PlanError::InvalidParams("clearance_margin must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub path: Vec<Config5D>,
    /// Wall-clock planning time including goal sampling, s.
    pub planning_time: f64,
    pub attempts_used: u32,
    pub success: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("start configuration is in collision or out of limits")]
    InvalidStart,
    #[error("no collision-free goal configuration found")]
    NoGoalConfigs,
    #[error("unable to find a collision-free path after {attempts} attempts in {elapsed:.1} s")]
    PlanningFailed { attempts: u32, elapsed: f64 },
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
}

struct Tree {
    nodes: Vec<Config5D>,
    parents: Vec<usize>,
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

impl Tree {
    fn new(roots: &[Config5D]) -> Self {
        Self { nodes: roots.to_vec(), parents: (0..roots.len()).collect() }
    }

    fn nearest(&self, q: &Config5D, m: &Metric) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = m.distance(n, q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn push(&mut self, q: Config5D, parent: usize) -> usize {
        self.nodes.push(q);
        self.parents.push(parent);
        self.nodes.len() - 1
    }

    /// Node sequence from `i` back to its root.
    fn branch(&self, mut i: usize) -> Vec<Config5D> {
        let mut out = vec![self.nodes[i]];
        while self.parents[i] != i {
            i = self.parents[i];
            out.push(self.nodes[i]);
        }
        out
    }
}

struct Planner<'a> {
    check: &'a Validity<'a>,
    metric: Metric,
    params: &'a PlannerParams,
    lo: [f64; DOF],
    hi: [f64; DOF],
}

impl Planner<'_> {
    fn sample(&self, rng: &mut impl Rng) -> Config5D {
        let mut q = [0.0; DOF];
        for i in 0..DOF {
            q[i] = rng.random_range(self.lo[i]..self.hi[i]);
        }
        Config5D::new(q)
    }

    fn extend(&self, tree: &mut Tree, target: &Config5D) -> Extend {
        let near = tree.nearest(target, &self.metric);
        let from = tree.nodes[near];
        let d = self.metric.distance(&from, target);
        let (to, reached) = if d <= self.params.step { (*target, true) } else { (from.interpolate(target, self.params.step / d), false) };
        if !self.check.edge_ok(&from, &to, &self.metric, self.params.resolution) {
            return Extend::Trapped;
        }
        let i = tree.push(to, near);
        if reached {
            Extend::Reached(i)
        } else {
            Extend::Advanced(i)
        }
    }

    fn connect(&self, tree: &mut Tree, target: &Config5D) -> Extend {
        loop {
            match self.extend(tree, target) {
                Extend::Advanced(_) => continue,
                other => return other,
            }
        }
    }

    fn attempt(&self, start: &Config5D, goals: &[Config5D], rng: &mut impl Rng, deadline: Instant) -> Option<Vec<Config5D>> {
        let mut a = Tree::new(std::slice::from_ref(start));
        let mut b = Tree::new(goals);
        // `a` always holds the tree rooted at the start when this is false.
        let mut swapped = false;
        for it in 0..self.params.max_iterations {
            if it % 64 == 0 && Instant::now() >= deadline {
                return None;
            }
            let q = self.sample(rng);
            let new = match self.extend(&mut a, &q) {
                Extend::Trapped => None,
                Extend::Advanced(i) | Extend::Reached(i) => Some(i),
            };
            if let Some(i) = new {
                let q_new = a.nodes[i];
                if let Extend::Reached(j) = self.connect(&mut b, &q_new) {
                    let (mut head, tail) = if swapped { (b.branch(j), a.branch(i)) } else { (a.branch(i), b.branch(j)) };
                    head.reverse();
                    // Both branches end at the meeting configuration.
                    head.extend_from_slice(&tail[1..]);
                    return Some(head);
                }
            }
            std::mem::swap(&mut a, &mut b);
            swapped = !swapped;
        }
        None
    }
}

/// Greedy shortcutting: from each kept node jump to the farthest later node
/// reachable by a valid straight edge. Never lengthens the path under
/// `metric`.
pub fn shortcut_path(path: &[Config5D], check: &Validity<'_>, metric: &Metric, resolution: f64) -> Vec<Config5D> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut next = i + 1;
        for j in (i + 2..path.len()).rev() {
            if check.edge_ok(&path[i], &path[j], metric, resolution) {
                next = j;
                break;
            }
        }
        out.push(path[next]);
        i = next;
    }
    out
}

/// Plans from `start` to any of `goals`, restarting up to `params.attempts`
/// times within the time budget, then shortcuts the path.
pub fn plan_rrt_connect(
    check: &Validity<'_>,
    start: &Config5D,
    goals: &[Config5D],
    params: &PlannerParams,
    rng: &mut impl Rng,
) -> Result<PlanResult, PlanError> {
    let t0 = Instant::now();
    params.validate()?;
    if !check.config_ok(start) {
        return Err(PlanError::InvalidStart);
    }
    let goals: Vec<Config5D> = goals.iter().copied().filter(|g| check.config_ok(g)).collect();
    if goals.is_empty() {
        return Err(PlanError::NoGoalConfigs);
    }
    let planner = planner_for(check, params);
    let deadline = t0 + std::time::Duration::from_secs_f64(params.time_budget);
    for attempt in 1..=params.attempts {
        if let Some(raw) = planner.attempt(start, &goals, rng, deadline) {
            let path = shortcut_path(&raw, check, &planner.metric, params.resolution);
            log::debug!("planned in attempt {attempt}: {} raw nodes, {} after shortcutting", raw.len(), path.len());
            return Ok(PlanResult { path, planning_time: t0.elapsed().as_secs_f64(), attempts_used: attempt, success: true });
        }
        if Instant::now() >= deadline {
            return Err(PlanError::PlanningFailed { attempts: attempt, elapsed: t0.elapsed().as_secs_f64() });
        }
    }
    Err(PlanError::PlanningFailed { attempts: params.attempts, elapsed: t0.elapsed().as_secs_f64() })
}

fn planner_for<'a>(check: &'a Validity<'a>, params: &'a PlannerParams) -> Planner<'a> {
    let b = &check.world.bounds;
    let lim = &check.robot.joint_pos_limits;
    Planner {
        check,
        metric: Metric::for_robot(check.robot),
        params,
        lo: [b.min.x, b.min.y, -PI, lim[0][0], lim[1][0]],
        hi: [b.max.x, b.max.y, PI, lim[0][1], lim[1][1]],
    }
}

/// Samples goal configurations for an end-effector setpoint and plans to
/// them. Planning time covers both stages.
pub fn plan_to_setpoint(
    world: &WorldModel,
    robot: &RobotParams,
    start: &Config5D,
    setpoint: Vec2,
    params: &PlannerParams,
    rng: &mut impl Rng,
) -> Result<PlanResult, PlanError> {
    let t0 = Instant::now();
    params.validate()?;
    let check = Validity { world, robot, margin: params.clearance_margin };
    if !check.config_ok(start) {
        return Err(PlanError::InvalidStart);
    }
    let goals = ik_goal_configs(&check, setpoint, params.goal_tolerance, params.n_goals, rng);
    if goals.is_empty() {
        return Err(PlanError::NoGoalConfigs);
    }
    let remaining = PlannerParams { time_budget: (params.time_budget - t0.elapsed().as_secs_f64()).max(1e-3), ..params.clone() };
    let mut res = plan_rrt_connect(&check, start, &goals, &remaining, rng).map_err(|e| match e {
        PlanError::PlanningFailed { attempts, .. } => PlanError::PlanningFailed { attempts, elapsed: t0.elapsed().as_secs_f64() },
        e => e,
    })?;
    res.planning_time = t0.elapsed().as_secs_f64();
    Ok(res)
}
