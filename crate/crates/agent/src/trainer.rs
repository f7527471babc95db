//! Training loop: alternating rollout and update phases, tolerance
//! curriculum, CSV log, checkpoints and resumption.

use crate::checkpoint::{self, CheckpointError};
use crate::network::Network;
use crate::params::{NetworkSpec, PolicyParams, Tensor};
use crate::ppo::{ppo_update, Adam, GradientError, TrainConfig};
use crate::rollout::{collect_rollouts, RolloutBuffer, Worker};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;
use wbc_core::adr::{AdrConfig, AdrState};
use wbc_core::env::{EnvConfig, EnvError};

pub const LOG_FILE: &str = "train_log.csv";
pub const STATE_FILE: &str = "trainer_state.json";
pub const POLICY_FILE: &str = "policy.wbc";
pub const OPTIMIZER_FILE: &str = "optimizer.wbc";

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("training log: {0}")]
    Csv(#[from] csv::Error),
    #[error("trainer state: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub update: usize,
    /// Environment steps consumed so far.
    pub steps: u64,
    pub episodes: usize,
    pub mean_episode_reward: Option<f64>,
    pub mean_episode_length: Option<f64>,
    pub success_rate: Option<f64>,
    /// Tolerance radius during this rollout, m.
    pub d_h: f64,
    /// Tolerance radius after the curriculum step, m.
    pub d_h_next: f64,
    pub lr: f64,
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub explained_variance: f64,
    pub rollout_secs: f64,
    pub update_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrainerState {
    update: usize,
    steps: u64,
    adam_t: u64,
    adr: AdrState,
    train: TrainConfig,
    network: NetworkSpec,
}

pub struct Trainer {
    env_cfg: Arc<EnvConfig>,
    cfg: TrainConfig,
    net: Network,
    params: PolicyParams,
    adam: Adam,
    adr: AdrState,
    workers: Vec<Worker>,
    update: usize,
    steps: u64,
}

fn mix(seed: u64, k: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Trainer {
    pub fn new(env_cfg: EnvConfig, spec: NetworkSpec, cfg: TrainConfig, adr: AdrConfig) -> Result<Self, TrainError> {
        let params = PolicyParams::init(&spec, cfg.seed);
        Self::from_parts(env_cfg, spec, cfg, AdrState::new(adr), params, None, 0, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        env_cfg: EnvConfig,
        spec: NetworkSpec,
        cfg: TrainConfig,
        adr: AdrState,
        params: PolicyParams,
        adam: Option<Adam>,
        update: usize,
        steps: u64,
    ) -> Result<Self, TrainError> {
        cfg.validate().map_err(TrainError::Config)?;
        spec.validate().map_err(|e| TrainError::Config(e.to_string()))?;
        adr.config.validate().map_err(TrainError::Config)?;
        env_cfg.validate()?;
        if env_cfg.observation_len() != spec.obs_len() {
            return Err(TrainError::Config(format!(
                "environment observation length {} differs from network input {}",
                env_cfg.observation_len(),
                spec.obs_len()
            )));
        }
        params.check(&spec).map_err(|e| TrainError::Config(e.to_string()))?;
        let env_cfg = Arc::new(env_cfg);
        let worker_seed = mix(cfg.seed, update as u64);
        let workers = (0..cfg.n_workers)
            .map(|i| Worker::new(env_cfg.clone(), worker_seed, i, adr.d_h))
            .collect::<Result<Vec<_>, _>>()?;
        let net = Network::new(&spec);
        let adam =
            adam.unwrap_or_else(|| Adam::new(net.num_params(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps));
        Ok(Self { env_cfg, cfg, net, params, adam, adr, workers, update, steps })
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn adr(&self) -> &AdrState {
        &self.adr
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn env_config(&self) -> &EnvConfig {
        &self.env_cfg
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates_done(&self) -> usize {
        self.update
    }

    /// Whole batches that fit in `total_steps`; the budget is never exceeded.
    pub fn total_updates(&self) -> usize {
        (self.cfg.total_steps / self.cfg.batch_size() as u64) as usize
    }

    pub fn is_finished(&self) -> bool {
        self.steps + self.cfg.batch_size() as u64 > self.cfg.total_steps
    }

    /// Collects a rollout with the current parameters.
    pub fn collect(&mut self) -> Result<RolloutBuffer, TrainError> {
        let flat = self.params.to_flat();
        Ok(collect_rollouts(&mut self.workers, &self.net, &flat, self.cfg.n_steps)?)
    }

    /// One rollout phase followed by one update phase.
    pub fn update_once(&mut self) -> Result<UpdateStats, TrainError> {
        let t0 = Instant::now();
        let d_h = self.adr.d_h;
        let buf = self.collect()?;
        let rollout_secs = t0.elapsed().as_secs_f64();

        let progress = self.steps as f64 / self.cfg.total_steps as f64;
        let t1 = Instant::now();
        let shuffle_seed = mix(self.cfg.seed ^ 0x5EED, self.update as u64 + 1);
        let out = ppo_update(&self.net, &mut self.params, &mut self.adam, &buf, &self.cfg, progress, shuffle_seed)?;
        let update_secs = t1.elapsed().as_secs_f64();
        self.steps += buf.len() as u64;
        self.update += 1;

        let episodes: Vec<_> = buf.episodes().collect();
        let n = episodes.len();
        let mean = |f: &dyn Fn(&crate::rollout::EpisodeRecord) -> f64| {
            (n > 0).then(|| episodes.iter().map(|e| f(e)).sum::<f64>() / n as f64)
        };
        let mean_episode_reward = mean(&|e| e.result.reward);
        let mean_episode_length = mean(&|e| e.result.steps as f64);
        let success_rate = mean(&|e| if e.result.outcome.is_success() { 1.0 } else { 0.0 });

        // Curriculum outcomes are applied in worker order at the phase boundary.
        for e in &episodes {
            self.adr.update(e.result.outcome.is_success());
        }
        if self.adr.d_h != d_h {
            for w in &mut self.workers {
                w.set_tolerance(self.adr.d_h);
            }
        }

        let stats = UpdateStats {
            update: self.update,
            steps: self.steps,
            episodes: n,
            mean_episode_reward,
            mean_episode_length,
            success_rate,
            d_h,
            d_h_next: self.adr.d_h,
            lr: out.lr,
            loss: out.loss.loss,
            policy_loss: out.loss.policy_loss,
            value_loss: out.loss.value_loss,
            entropy: out.loss.entropy,
            clip_frac: out.loss.clip_frac,
            approx_kl: out.loss.approx_kl,
            grad_norm: out.grad_norm,
            explained_variance: out.explained_variance,
            rollout_secs,
            update_secs,
        };
        log::info!(
            "update {} steps {} episodes {} reward {} success {} d_h {:.3} loss {:.4} kl {:.5} ({:.1}s + {:.1}s)",
            stats.update,
            stats.steps,
            n,
            fmt_opt(stats.mean_episode_reward),
            fmt_opt(stats.success_rate),
            stats.d_h,
            stats.loss,
            stats.approx_kl,
            rollout_secs,
            update_secs
        );
        Ok(stats)
    }

    /// Trains until `total_steps` or until `on_update` returns false. With an
    /// output directory, appends to the CSV log, writes periodic checkpoints
    /// and keeps the resumable state current.
    pub fn run(
        &mut self,
        out_dir: Option<&Path>,
        mut on_update: impl FnMut(&UpdateStats) -> bool,
    ) -> Result<Vec<UpdateStats>, TrainError> {
        let mut log = match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir.join("checkpoints"))?;
                let path = dir.join(LOG_FILE);
                let exists = path.exists() && std::fs::metadata(&path)?.len() > 0;
                let file = std::fs::OpenOptions::new().create(true).append(true).open(&path)?;
                Some(csv::WriterBuilder::new().has_headers(!exists).from_writer(file))
            }
            None => None,
        };
        let mut history = Vec::new();
        while !self.is_finished() {
            let stats = self.update_once()?;
            if let (Some(dir), Some(w)) = (out_dir, log.as_mut()) {
                w.serialize(&stats)?;
                w.flush()?;
                let every = self.cfg.checkpoint_every;
                if every > 0 && (self.update % every == 0 || self.is_finished()) {
                    checkpoint::save(&self.params, &checkpoint_path(dir, self.update))?;
                    self.save_state(dir)?;
                }
            }
            let go_on = on_update(&stats);
            history.push(stats);
            if !go_on {
                break;
            }
        }
        if let Some(dir) = out_dir {
            self.save_state(dir)?;
        }
        Ok(history)
    }

    /// Writes the latest policy, optimizer moments and loop counters.
    pub fn save_state(&self, dir: &Path) -> Result<(), TrainError> {
        std::fs::create_dir_all(dir)?;
        checkpoint::save(&self.params, &dir.join(POLICY_FILE))?;
        let n = self.adam.m.len();
        let moments = PolicyParams {
            version: self.params.version,
            tensors: vec![
                Tensor { name: "adam.m".into(), shape: vec![n], data: self.adam.m.iter().map(|&v| v as f32).collect() },
                Tensor { name: "adam.v".into(), shape: vec![n], data: self.adam.v.iter().map(|&v| v as f32).collect() },
            ],
        };
        checkpoint::save(&moments, &dir.join(OPTIMIZER_FILE))?;
        let state = TrainerState {
            update: self.update,
            steps: self.steps,
            adam_t: self.adam.t,
            adr: self.adr.clone(),
            train: self.cfg.clone(),
            network: self.net.spec().clone(),
        };
        std::fs::write(dir.join(STATE_FILE), serde_json::to_string_pretty(&state)?)?;
        Ok(())
    }

    /// Restores a trainer from `save_state` output. `total_steps` may be
    /// raised to continue past the original budget. Workers restart with fresh
    /// episodes, so a resumed run is not bitwise identical to an uninterrupted
    /// one.
    pub fn resume(dir: &Path, env_cfg: EnvConfig, total_steps: Option<u64>) -> Result<Self, TrainError> {
        let state: TrainerState = serde_json::from_str(&std::fs::read_to_string(dir.join(STATE_FILE))?)?;
        let params = checkpoint::load(&dir.join(POLICY_FILE), &state.network)?;
        let moments = checkpoint::decode(&std::fs::read(dir.join(OPTIMIZER_FILE))?)?;
        let n = params.num_params();
        let get = |name: &str| -> Result<Vec<f64>, TrainError> {
            let t = moments
                .get(name)
                .filter(|t| t.data.len() == n)
                .ok_or_else(|| TrainError::Config(format!("optimizer state lacks {name} of length {n}")))?;
            Ok(t.data.iter().map(|&v| v as f64).collect())
        };
        let mut cfg = state.train;
        if let Some(t) = total_steps {
            cfg.total_steps = t;
        }
        let adam = Adam {
            m: get("adam.m")?,
            v: get("adam.v")?,
            t: state.adam_t,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        };
        Self::from_parts(env_cfg, state.network, cfg, state.adr, params, Some(adam), state.update, state.steps)
    }
}

pub fn checkpoint_path(dir: &Path, update: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("ckpt_{update:06}.wbc"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

/// Reads a training log written by [`Trainer::run`].
pub fn read_log(path: &Path) -> Result<Vec<UpdateStats>, TrainError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}
