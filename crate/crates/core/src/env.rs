//! Episode orchestration: reset and step semantics, observation assembly and
//! termination.

use crate::geometry::{Pose2, Vec2};
use crate::pathref::{self, PathError, Projection, RefPath};
use crate::reward::{step_reward, DeviationMode, RewardParams, RewardTerms, StepContext, Termination};
use crate::robot::{
    action_to_accels, collision_shapes, forward_kinematics, integrate, joint_limits_violated, world_to_ee_frame,
    Action, RobotParams, RobotState,
};
use crate::sensors::{simulate_scan_into, LidarConfig};
use crate::trace::{TraceHeader, TraceRecord, TraceStep};
use crate::world::{generate_world, ScenarioSpec, WorldError, WorldModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

pub const MAX_SPAWN_SAMPLES: usize = 1000;
/// Proprioceptive entries: setpoint (2), base velocity (3), joints (2),
/// joint velocities (2).
pub const PROPRIO_LEN: usize = 9;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("no collision-free spawn found in {0} samples")]
    ResetFailed(usize),
    #[error("reference path: {0}")]
    Path(#[from] PathError),
    #[error("step called after the episode ended")]
    SteppedAfterDone,
    #[error("step called before reset")]
    NotReset,
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvOptions {
    /// Initial joint positions are drawn uniformly from this interval, rad.
    pub initial_joint_range: [f64; 2],
    /// Obstacle inflation for the end-effector reference path, m.
    pub path_inflation: f64,
    /// Setpoint coordinates are clipped to +-this before scaling, m.
    pub setpoint_clip: f64,
    /// Overrides the `timeout / control_period` episode horizon.
    pub max_episode_steps: Option<usize>,
    pub record_trace: bool,
}

impl Default for EnvOptions {
    fn default() -> Self {
        Self {
            initial_joint_range: [-1.0, 1.0],
            path_inflation: pathref::DEFAULT_INFLATION,
            setpoint_clip: 10.0,
            max_episode_steps: None,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub scenario: ScenarioSpec,
    pub robot: RobotParams,
    pub lidar_front: LidarConfig,
    pub lidar_rear: LidarConfig,
    pub reward: RewardParams,
    pub options: EnvOptions,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default(),
            robot: RobotParams::default(),
            lidar_front: LidarConfig::front(),
            lidar_rear: LidarConfig::rear(),
            reward: RewardParams::default(),
            options: EnvOptions::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        self.scenario.validate()?;
        self.robot.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        self.lidar_front.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        self.lidar_rear.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        self.reward.validate().map_err(EnvError::Config)?;
        if self.lidar_front.n_beams != self.lidar_rear.n_beams {
            return Err(EnvError::Config("both scanners need the same beam count".into()));
        }
        if (self.reward.control_period - self.robot.control_period).abs() > 1e-12 {
            return Err(EnvError::Config("reward and robot control periods differ".into()));
        }
        let [lo, hi] = self.options.initial_joint_range;
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(EnvError::Config("initial_joint_range must satisfy min <= max".into()));
        }
        if !(self.options.setpoint_clip > 0.0) {
            return Err(EnvError::Config("setpoint_clip must be positive".into()));
        }
        Ok(())
    }

    pub fn observation_len(&self) -> usize {
        self.lidar_front.n_beams + self.lidar_rear.n_beams + PROPRIO_LEN
    }

    pub fn max_steps(&self) -> usize {
        self.options.max_episode_steps.unwrap_or_else(|| self.reward.episode_steps())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    HoldSuccess,
    Collision,
    JointLimit,
    Timeout,
}

impl Outcome {
    fn from_termination(t: Termination) -> Option<Self> {
        match t {
            Termination::None => None,
            Termination::Collision => Some(Outcome::Collision),
            Termination::JointLimit => Some(Outcome::JointLimit),
            Termination::HoldSuccess => Some(Outcome::HoldSuccess),
            Termination::Timeout => Some(Outcome::Timeout),
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::HoldSuccess
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub steps: usize,
    pub reward: f64,
    pub terms: RewardTerms,
    /// Summed base displacement, m.
    pub base_distance: f64,
    /// Summed absolute joint displacement, rad.
    pub joint_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub terms: RewardTerms,
    pub goal_distance: f64,
    pub in_sphere: bool,
    /// Set on the final step of an episode.
    pub result: Option<EpisodeResult>,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Start configuration and setpoint for one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSetup {
    pub start: RobotState,
    pub goal: Vec2,
}

pub struct Env {
    cfg: Arc<EnvConfig>,
    world: Arc<WorldModel>,
    path: Option<RefPath>,
    goal: Vec2,
    state: RobotState,
    rng: ChaCha8Rng,
    seed: u64,
    tolerance: f64,
    steps: usize,
    hold_steps: usize,
    hold_acc: f64,
    last_proj: Projection,
    done: bool,
    totals: RewardTerms,
    total_reward: f64,
    base_distance: f64,
    joint_distance: f64,
    scans: [Vec<f64>; 2],
    trace: Vec<TraceRecord>,
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 40);
    rng
}

/// Samples a collision-free start and a setpoint with a reachable reference
/// path, by rejection.
pub fn sample_setup(
    world: &WorldModel,
    cfg: &EnvConfig,
    rng: &mut impl Rng,
) -> Result<(EpisodeSetup, RefPath), EnvError> {
    let robot = &cfg.robot;
    let [jlo, jhi] = cfg.options.initial_joint_range;
    for _ in 0..MAX_SPAWN_SAMPLES {
        let pos = world.spawn_region.point_at(rng.random(), rng.random());
        let theta = world.spawn_heading + world.spawn_heading_spread * (2.0 * rng.random::<f64>() - 1.0);
        let mut joints = [0.0; 2];
        for (j, lim) in joints.iter_mut().zip(&robot.joint_pos_limits) {
            let lo = jlo.max(lim[0]);
            let hi = jhi.min(lim[1]);
            *j = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        }
        let goal = world.goal_region.point_at(rng.random(), rng.random());
        let start = RobotState::at_rest(Pose2::new(pos.x, pos.y, crate::geometry::wrap_angle(theta)), joints);
        if joint_limits_violated(&start, robot) || world.in_collision(&collision_shapes(&start, robot)) {
            continue;
        }
        let ee = forward_kinematics(&start, robot).position();
        if let Ok(path) = pathref::plan_ee_path(world, ee, goal, cfg.options.path_inflation) {
            return Ok((EpisodeSetup { start, goal }, path));
        }
    }
    Err(EnvError::ResetFailed(MAX_SPAWN_SAMPLES))
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        Self::with_shared(Arc::new(cfg))
    }

    pub fn with_shared(cfg: Arc<EnvConfig>) -> Result<Self, EnvError> {
        cfg.validate()?;
        let n = cfg.lidar_front.n_beams;
        let placeholder = WorldModel {
            obstacles: Vec::new(),
            corridor_axis: crate::world::Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
            corridor_width: 0.0,
            goal_region: crate::geometry::OrientedBox {
                center: Vec2::ZERO,
                half_extents: Vec2::new(1.0, 1.0),
                yaw: 0.0,
            },
            spawn_region: crate::geometry::Ellipse { center: Vec2::ZERO, semi_axes: Vec2::new(1.0, 1.0) },
            spawn_heading: 0.0,
            spawn_heading_spread: 0.0,
            bounds: crate::geometry::Aabb::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
        };
        Ok(Self {
            world: Arc::new(placeholder),
            path: None,
            goal: Vec2::ZERO,
            state: RobotState::default(),
            rng: noise_rng(0),
            seed: 0,
            tolerance: 0.5,
            steps: 0,
            hold_steps: 0,
            hold_acc: 0.0,
            last_proj: Projection { s: 0.0, d: 0.0 },
            done: true,
            totals: RewardTerms::default(),
            total_reward: 0.0,
            base_distance: 0.0,
            joint_distance: 0.0,
            scans: [vec![0.0; n], vec![0.0; n]],
            trace: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn world(&self) -> &Arc<WorldModel> {
        &self.world
    }

    pub fn path(&self) -> Option<&RefPath> {
        self.path.as_ref()
    }

    pub fn goal(&self) -> Vec2 {
        self.goal
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn observation_len(&self) -> usize {
        self.cfg.observation_len()
    }

    /// Radius of the tolerance sphere (d_h); takes effect on the next step.
    pub fn set_tolerance(&mut self, d_h: f64) {
        self.tolerance = d_h;
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Starts an episode in a freshly generated world.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>, EnvError> {
        let world = Arc::new(generate_world(&self.cfg.scenario, seed)?);
        let mut rng = noise_rng(seed);
        rng.set_stream(2 << 40);
        let (setup, path) = sample_setup(&world, &self.cfg, &mut rng)?;
        self.begin(world, setup, path, seed)
    }

    /// Starts an episode in a given world from a given setup.
    pub fn reset_with(&mut self, world: Arc<WorldModel>, setup: EpisodeSetup, seed: u64) -> Result<Vec<f64>, EnvError> {
        let ee = forward_kinematics(&setup.start, &self.cfg.robot).position();
        let path = pathref::plan_ee_path(&world, ee, setup.goal, self.cfg.options.path_inflation)?;
        self.begin(world, setup, path, seed)
    }

    fn begin(&mut self, world: Arc<WorldModel>, setup: EpisodeSetup, path: RefPath, seed: u64) -> Result<Vec<f64>, EnvError> {
        self.world = world;
        self.goal = setup.goal;
        self.state = setup.start;
        self.rng = noise_rng(seed);
        self.seed = seed;
        self.steps = 0;
        self.hold_steps = 0;
        self.hold_acc = 0.0;
        self.done = false;
        self.totals = RewardTerms::default();
        self.total_reward = 0.0;
        self.base_distance = 0.0;
        self.joint_distance = 0.0;
        let ee = forward_kinematics(&self.state, &self.cfg.robot).position();
        self.last_proj = path.project(ee);
        self.path = Some(path);
        self.trace.clear();
        if self.cfg.options.record_trace {
            self.trace.push(TraceRecord::Header(Box::new(TraceHeader {
                seed,
                world: (*self.world).clone(),
                path: self.path.clone().expect("path set"),
                goal: self.goal,
                tolerance: self.tolerance,
                robot: self.cfg.robot.clone(),
                lidars: [self.cfg.lidar_front.clone(), self.cfg.lidar_rear.clone()],
                initial_state: self.state,
            })));
        }
        self.scan();
        let mut obs = vec![0.0; self.observation_len()];
        self.write_observation(&mut obs);
        Ok(obs)
    }

    fn scan(&mut self) {
        let cfg = &self.cfg;
        simulate_scan_into(&self.world, &self.state, &cfg.lidar_front, &mut self.rng, &mut self.scans[0]);
        simulate_scan_into(&self.world, &self.state, &cfg.lidar_rear, &mut self.rng, &mut self.scans[1]);
    }

    /// Normalized network input: scans, setpoint, base velocity, joints,
    /// joint velocities.
    pub fn write_observation(&self, out: &mut [f64]) {
        let cfg = &self.cfg;
        let n = cfg.lidar_front.n_beams;
        for (o, r) in out[..n].iter_mut().zip(&self.scans[0]) {
            *o = r / cfg.lidar_front.max_range;
        }
        for (o, r) in out[n..2 * n].iter_mut().zip(&self.scans[1]) {
            *o = r / cfg.lidar_rear.max_range;
        }
        let p = world_to_ee_frame(&self.state, &cfg.robot, self.goal);
        let clip = cfg.options.setpoint_clip;
        let rest = &mut out[2 * n..];
        rest[0] = p.x.clamp(-clip, clip) / clip;
        rest[1] = p.y.clamp(-clip, clip) / clip;
        let v = self.state.velocities();
        for i in 0..3 {
            rest[2 + i] = v[i] / cfg.robot.vel_limits[i];
        }
        for j in 0..2 {
            let [lo, hi] = cfg.robot.joint_pos_limits[j];
            rest[5 + j] = 2.0 * (self.state.joints[j] - lo) / (hi - lo) - 1.0;
            rest[7 + j] = v[3 + j] / cfg.robot.vel_limits[3 + j];
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutput, EnvError> {
        let path = self.path.as_ref().ok_or(EnvError::NotReset)?;
        if self.done {
            return Err(EnvError::SteppedAfterDone);
        }
        let cfg = Arc::clone(&self.cfg);
        let robot = &cfg.robot;
        let acc = action_to_accels(&action, robot);
        let prev = self.state;
        self.state = integrate(&prev, &acc, robot);
        self.steps += 1;
        self.base_distance += prev.base.position().dist(self.state.base.position());
        self.joint_distance += (self.state.joints[0] - prev.joints[0]).abs() + (self.state.joints[1] - prev.joints[1]).abs();

        let ee = forward_kinematics(&self.state, robot).position();
        let proj = path.project(ee);
        let deviation = match cfg.reward.deviation_mode {
            DeviationMode::Signed => proj.d - self.last_proj.d,
            DeviationMode::Absolute => proj.d * cfg.reward.control_period,
        };
        let progress = proj.s - self.last_proj.s;
        self.last_proj = proj;

        let shapes = collision_shapes(&self.state, robot);
        let base_clear = self.world.min_clearance(&shapes[..1]);
        let arm_clear = self.world.min_clearance(&shapes[1..]);
        let collided = base_clear == 0.0 || arm_clear == 0.0;
        let clearance = if cfg.reward.safety_margin_base_only { base_clear } else { base_clear.min(arm_clear) };

        let goal_distance = ee.dist(self.goal);
        let in_sphere = goal_distance <= self.tolerance;
        self.hold_steps = if in_sphere { self.hold_steps + 1 } else { 0 };

        let termination = if collided {
            Termination::Collision
        } else if joint_limits_violated(&self.state, robot) {
            Termination::JointLimit
        } else if self.hold_steps >= cfg.reward.hold_steps() {
            Termination::HoldSuccess
        } else if self.steps >= cfg.max_steps() {
            Termination::Timeout
        } else {
            Termination::None
        };

        let ctx = StepContext {
            deviation,
            progress,
            path_length: path.total_length,
            base_velocity: self.state.base_world_velocity(),
            clearance,
            goal_distance,
            tolerance: self.tolerance,
            in_sphere,
            termination,
            hold_accumulated: self.hold_acc,
        };
        let (terms, hold_acc) = step_reward(&ctx, &cfg.reward);
        self.hold_acc = hold_acc;
        let reward = terms.total();
        self.totals.accumulate(&terms);
        self.total_reward += reward;

        self.scan();
        let mut observation = vec![0.0; self.observation_len()];
        self.write_observation(&mut observation);

        if cfg.options.record_trace {
            self.trace.push(TraceRecord::Step(TraceStep {
                step: self.steps,
                state: self.state,
                action,
                terms,
                reward,
                ee,
                goal_distance,
                scans: self.scans.clone(),
            }));
        }

        let outcome = Outcome::from_termination(termination);
        self.done = outcome.is_some();
        let result = outcome.map(|outcome| EpisodeResult {
            outcome,
            steps: self.steps,
            reward: self.total_reward,
            terms: self.totals,
            base_distance: self.base_distance,
            joint_distance: self.joint_distance,
        });
        Ok(StepOutput {
            observation,
            reward,
            done: self.done,
            info: StepInfo { terms, goal_distance, in_sphere, result },
        })
    }

    /// Records collected since the last reset (empty unless tracing is on).
    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}
