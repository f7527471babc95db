//! The JSON run configuration. Every section and key is optional; missing
//! values take their defaults and unknown keys are rejected by name.

use serde::{Deserialize, Serialize};
use std::path::Path;
use wbc_agent::params::NetworkSpec;
use wbc_agent::ppo::TrainConfig;
use wbc_baseline::PlannerParams;
use wbc_core::adr::AdrConfig;
use wbc_core::env::EnvConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub network: NetworkSpec,
    pub train: TrainConfig,
    pub adr: AdrConfig,
    pub planner: PlannerParams,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.env.validate().map_err(|e| e.to_string())?;
        cfg.network.validate().map_err(|e| e.to_string())?;
        cfg.train.validate().map_err(|e| e.to_string())?;
        cfg.adr.validate()?;
        cfg.planner.validate().map_err(|e| e.to_string())?;
        if cfg.network.obs_len() != cfg.env.observation_len() {
            return Err(format!(
                "network input length {} differs from the observation length {} (check network.n_beams)",
                cfg.network.obs_len(),
                cfg.env.observation_len()
            ));
        }
        Ok(cfg)
    }
}

/// Every configuration key with its unit, shown by `--help`.
pub const CONFIG_KEYS: &str = "\
CONFIGURATION KEYS (JSON, all optional; dotted paths name nested objects)

env.scenario.corridor_width_range        [min, max] corridor width, m
env.scenario.corridor_length_range       [min, max] corridor length, m
env.scenario.shelf_count_range           [min, max] number of shelves
env.scenario.shelf_depth_range           [min, max] shelf depth, m
env.scenario.shelf_width_range           [min, max] shelf width along the corridor, m
env.scenario.door_count_range            [min, max] number of door gaps
env.scenario.door_width_range            [min, max] door width, m
env.scenario.wall_stub_count_range       [min, max] number of wall stubs
env.scenario.wall_stub_length_range      [min, max] wall stub length, m
env.scenario.spawn_distance_range        [min, max] spawn-to-shelf distance, m
env.scenario.spawn_semi_axes             [a, b] spawn ellipse semi-axes, m
env.scenario.spawn_heading_spread        half-width of the spawn heading spread, rad
env.scenario.goal_depth                  depth of the setpoint strip inside the shelf, m
env.scenario.goal_inset                  setpoint strip inset from the shelf edges, m
env.scenario.spawn_clearance             required clearance around the spawn center, m
env.scenario.base_clearance              base clearance for the approach check, m
env.scenario.ee_inflation                obstacle inflation for the end-effector path, m
env.scenario.fixed_layout                fixed world layout object, or null to generate
env.scenario.seedable                    vary the layout with the episode seed (bool)
env.robot.base_half_extents              [half length, half width] of the base, m
env.robot.arm_mount_offset               [x, y] arm mount in the base frame, m
env.robot.link_lengths                   [l1, l2] link lengths, m
env.robot.link_radius                    link capsule radius, m
env.robot.joint_pos_limits               [[min, max], [min, max]] joint limits, rad
env.robot.vel_limits                     velocity limits x, y (m/s), theta, phi1, phi2 (rad/s)
env.robot.acc_limits                     acceleration limits x, y (m/s^2), theta, phi1, phi2 (rad/s^2)
env.robot.control_period                 control period, s
env.lidar_front.mount                    {x, y, theta} scanner pose in the base frame, m and rad
env.lidar_front.fov                      field of view, rad
env.lidar_front.n_beams                  beams per scan
env.lidar_front.max_range                saturation range, m
env.lidar_front.noise_sigma              range noise standard deviation, m
env.lidar_front.dropout_prob             per-beam dropout probability
env.lidar_rear.*                         same keys as env.lidar_front
env.reward.time_weight                   total time penalty over a full episode
env.reward.timeout                       episode timeout, s
env.reward.deviation_weight              path deviation weight, 1/m
env.reward.progress_weight               reward for traversing the whole reference path
env.reward.safety_weight                 safety margin weight, 1/m
env.reward.safety_threshold              safety margin threshold, m
env.reward.hold_time_weight              holding reward for time in the tolerance sphere
env.reward.hold_distance_weight          holding reward for goal proximity
env.reward.hold_time                     required holding duration, s
env.reward.control_period                control period used by the reward, s
env.reward.collision_penalty             terminal collision penalty
env.reward.joint_limit_penalty           terminal joint limit penalty
env.reward.hold_bonus                    terminal bonus for a completed hold
env.reward.safety_margin_base_only       measure clearance for the base only (bool)
env.reward.deviation_mode                \"signed\" (change in distance) or \"absolute\"
env.options.initial_joint_range          [min, max] initial joint positions, rad
env.options.path_inflation               obstacle inflation of the reference path, m
env.options.setpoint_clip                setpoint coordinate clip before scaling, m
env.options.max_episode_steps            episode step limit, or null for timeout / period
env.options.record_trace                 record JSONL traces (bool)
network.n_beams                          beams per scan (must match the scanners)
network.conv1 / network.conv2            {channels, kernel, stride} of each convolution
network.pool1 / network.pool2            max-pool width, beams
network.scan_features                    scan branch output width
network.fusion_widths                    dense widths after the scan concat
network.proprio_len                      proprioceptive input length
network.trunk_widths                     dense widths after the proprioceptive concat
network.action_blocks                    action dimensions
network.action_levels                    acceleration levels per dimension
network.leaky_slope                      negative slope of the hidden activations
train.n_workers                          parallel rollout workers
train.n_steps                            steps per worker per rollout
train.n_minibatches                      minibatches per epoch
train.n_epochs                           passes over each rollout
train.clip_range                         probability ratio clip
train.ent_coeff                          entropy bonus coefficient
train.value_coeff                        value loss coefficient
train.gamma                              discount factor
train.lam                                GAE lambda
train.lr_start / train.lr_end            learning rate at the start and end (linear)
train.max_grad_norm                      global gradient norm clip
train.adam_beta1 / adam_beta2 / adam_eps Adam parameters
train.normalize_advantages               per-minibatch advantage normalization (bool)
train.reward_scale                       factor on rewards before GAE; critic learns scaled returns (> 0)
train.total_steps                        environment steps to train for
train.seed                               training seed
train.checkpoint_every                   checkpoint period, updates (0 disables)
adr.window                               episodes pooled per curriculum decision
adr.threshold                            success rate that shrinks the tolerance
adr.decay                                tolerance shrink factor
adr.d_h_max / adr.d_h_min                initial and final tolerance, m
planner.step                             RRT extension step, metric units
planner.resolution                       edge collision-check spacing, metric units
planner.attempts                         planner restarts
planner.max_iterations                   tree expansions per attempt
planner.time_budget                      planning time budget, s
planner.n_goals                          IK goal configurations
planner.goal_tolerance                   end-effector tolerance of goal configurations, m
planner.clearance_margin                 obstacle clearance kept by plans, m
";
