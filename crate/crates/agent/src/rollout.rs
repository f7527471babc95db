//! Parallel rollout collection: one environment, action RNG and network
//! workspace per worker, all reading a shared parameter snapshot.

use crate::dist::sample_action;
use crate::network::{Network, Workspace};
use crate::ppo::compute_gae;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use wbc_core::env::{Env, EnvConfig, EnvError, EpisodeResult};
use wbc_core::robot::Action;
use wbc_core::world::WorldError;

/// Consecutive unusable episode seeds tolerated before giving up.
const MAX_RESET_RETRIES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub worker: usize,
    pub seed: u64,
    /// Tolerance radius the episode ran with, m.
    pub tolerance: f64,
    pub result: EpisodeResult,
}

/// One worker's share of a rollout, `n_steps` transitions long.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkerRollout {
    pub obs: Vec<f64>,
    pub actions: Vec<Action>,
    pub logprobs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value of the observation following the last step.
    pub bootstrap: f64,
    pub episodes: Vec<EpisodeRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBuffer {
    pub obs_len: usize,
    pub workers: Vec<WorkerRollout>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.workers.iter().map(|w| w.actions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-worker GAE over rewards times `reward_scale`, concatenated in
    /// worker order.
    pub fn advantages(&self, gamma: f64, lam: f64, reward_scale: f64) -> (Vec<f64>, Vec<f64>) {
        let mut adv = Vec::with_capacity(self.len());
        let mut ret = Vec::with_capacity(self.len());
        let mut scaled = Vec::new();
        for w in &self.workers {
            scaled.clear();
            scaled.extend(w.rewards.iter().map(|r| r * reward_scale));
            let (a, r) = compute_gae(&scaled, &w.values, &w.dones, w.bootstrap, gamma, lam);
            adv.extend(a);
            ret.extend(r);
        }
        (adv, ret)
    }

    pub fn flat_obs(&self) -> Vec<f64> {
        self.workers.iter().flat_map(|w| w.obs.iter().copied()).collect()
    }

    pub fn flat_actions(&self) -> Vec<Action> {
        self.workers.iter().flat_map(|w| w.actions.iter().copied()).collect()
    }

    pub fn flat_logprobs(&self) -> Vec<f64> {
        self.workers.iter().flat_map(|w| w.logprobs.iter().copied()).collect()
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.workers.iter().flat_map(|w| w.values.iter().copied()).collect()
    }

    /// Finished episodes in worker order.
    pub fn episodes(&self) -> impl Iterator<Item = &EpisodeRecord> {
        self.workers.iter().flat_map(|w| w.episodes.iter())
    }
}

pub struct Worker {
    pub index: usize,
    env: Env,
    obs: Vec<f64>,
    action_rng: ChaCha8Rng,
    seed_rng: ChaCha8Rng,
    episode_seed: u64,
    ws: Workspace,
}

fn is_retryable(e: &EnvError) -> bool {
    matches!(e, EnvError::ResetFailed(_) | EnvError::World(WorldError::GenerationFailed(_)) | EnvError::Path(_))
}

impl Worker {
    /// Streams are derived from `(seed, index)` so workers never share
    /// randomness.
    pub fn new(cfg: Arc<EnvConfig>, seed: u64, index: usize, tolerance: f64) -> Result<Self, EnvError> {
        let mut env = Env::with_shared(cfg)?;
        env.set_tolerance(tolerance);
        let mut action_rng = ChaCha8Rng::seed_from_u64(seed);
        action_rng.set_stream(2 * index as u64 + 1);
        let mut seed_rng = ChaCha8Rng::seed_from_u64(seed);
        seed_rng.set_stream(2 * index as u64 + 2);
        let mut w = Self { index, env, obs: Vec::new(), action_rng, seed_rng, episode_seed: 0, ws: Workspace::default() };
        w.reset()?;
        Ok(w)
    }

    fn reset(&mut self) -> Result<(), EnvError> {
        let mut last = None;
        for _ in 0..MAX_RESET_RETRIES {
            let seed = self.seed_rng.next_u64();
            match self.env.reset(seed) {
                Ok(obs) => {
                    self.obs = obs;
                    self.episode_seed = seed;
                    return Ok(());
                }
                Err(e) if is_retryable(&e) => {
                    log::debug!("worker {}: episode seed {seed} unusable: {e}", self.index);
                    last = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn set_tolerance(&mut self, d_h: f64) {
        self.env.set_tolerance(d_h);
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    /// Advances `n_steps`, resetting in place whenever an episode ends.
    pub fn collect(&mut self, net: &Network, params: &[f64], n_steps: usize) -> Result<WorkerRollout, EnvError> {
        let obs_len = self.obs.len();
        let mut out = WorkerRollout {
            obs: Vec::with_capacity(n_steps * obs_len),
            actions: Vec::with_capacity(n_steps),
            logprobs: Vec::with_capacity(n_steps),
            values: Vec::with_capacity(n_steps),
            rewards: Vec::with_capacity(n_steps),
            dones: Vec::with_capacity(n_steps),
            ..WorkerRollout::default()
        };
        for _ in 0..n_steps {
            net.forward(params, &self.obs, 1, &mut self.ws);
            let (action, logp) = sample_action(self.ws.logits(), &mut self.action_rng);
            let value = self.ws.values()[0];
            let step = self.env.step(action)?;
            out.obs.extend_from_slice(&self.obs);
            out.actions.push(action);
            out.logprobs.push(logp);
            out.values.push(value);
            out.rewards.push(step.reward);
            out.dones.push(step.done);
            if let Some(result) = step.info.result {
                out.episodes.push(EpisodeRecord {
                    worker: self.index,
                    seed: self.episode_seed,
                    tolerance: self.env.tolerance(),
                    result,
                });
                self.reset()?;
            } else {
                self.obs = step.observation;
            }
        }
        net.forward(params, &self.obs, 1, &mut self.ws);
        out.bootstrap = self.ws.values()[0];
        Ok(out)
    }
}

/// Runs every worker for `n_steps` on its own thread.
pub fn collect_rollouts(
    workers: &mut [Worker],
    net: &Network,
    params: &[f64],
    n_steps: usize,
) -> Result<RolloutBuffer, EnvError> {
    let obs_len = net.spec().obs_len();
    let results: Vec<Result<WorkerRollout, EnvError>> = std::thread::scope(|s| {
        let handles: Vec<_> = workers.iter_mut().map(|w| s.spawn(move || w.collect(net, params, n_steps))).collect();
        handles.into_iter().map(|h| h.join().expect("rollout worker panicked")).collect()
    });
    let workers = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RolloutBuffer { obs_len, workers })
}
