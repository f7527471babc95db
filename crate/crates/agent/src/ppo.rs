//! Clipped-surrogate PPO: advantage estimation, composite loss with exact
//! gradients, Adam, and the epoch/minibatch update loop.

use crate::dist::{logprob_entropy, logprob_entropy_grad, N_LOGITS};
use crate::network::{Network, Workspace};
use crate::params::PolicyParams;
use crate::rollout::RolloutBuffer;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wbc_core::robot::Action;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_workers: usize,
    /// Steps per worker per rollout.
    pub n_steps: usize,
    pub n_minibatches: usize,
    /// Passes over each rollout batch.
    pub n_epochs: usize,
    pub clip_range: f64,
    pub ent_coeff: f64,
    pub value_coeff: f64,
    pub gamma: f64,
    pub lam: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub max_grad_norm: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Normalize advantages to zero mean and unit variance per minibatch.
    pub normalize_advantages: bool,
    /// Factor applied to rewards before GAE; the critic learns scaled returns.
    pub reward_scale: f64,
    pub total_steps: u64,
    pub seed: u64,
    /// Write a checkpoint every this many updates (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_workers: 4,
            n_steps: 2048,
            n_minibatches: 8,
            n_epochs: 30,
            clip_range: 0.2,
            ent_coeff: 0.00376,
            value_coeff: 0.5,
            gamma: 0.999,
            lam: 0.8,
            lr_start: 1e-3,
            lr_end: 0.15e-3,
            max_grad_norm: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-5,
            normalize_advantages: true,
            reward_scale: 1.0,
            total_steps: 3_000_000,
            seed: 0,
            checkpoint_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn batch_size(&self) -> usize {
        self.n_workers * self.n_steps
    }

    pub fn minibatch_size(&self) -> usize {
        self.batch_size() / self.n_minibatches
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_workers == 0 || self.n_steps == 0 || self.n_minibatches == 0 || self.n_epochs == 0 {
            return Err("n_workers, n_steps, n_minibatches and n_epochs must be positive".into());
        }
        if self.batch_size() % self.n_minibatches != 0 {
            return Err(format!(
                "n_minibatches ({}) must divide n_workers * n_steps ({})",
                self.n_minibatches,
                self.batch_size()
            ));
        }
        if self.total_steps < self.batch_size() as u64 {
            return Err(format!("total_steps ({}) is less than one batch ({})", self.total_steps, self.batch_size()));
        }
        for (name, v) in [("gamma", self.gamma), ("lam", self.lam)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.clip_range > 0.0) {
            return Err("clip_range must be positive".into());
        }
        if !(self.lr_start > 0.0 && self.lr_end >= 0.0) {
            return Err("learning rates must be positive".into());
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err("reward_scale must be positive".into());
        }
        if !(self.max_grad_norm > 0.0) {
            return Err("max_grad_norm must be positive".into());
        }
        Ok(())
    }

    /// Linear interpolation from `lr_start` to `lr_end`.
    pub fn lr(&self, progress: f64) -> f64 {
        lr_schedule(progress, self.lr_start, self.lr_end)
    }
}

/// `start * (1 - progress) + end * progress`, with `progress` clamped to [0, 1].
pub fn lr_schedule(progress: f64, start: f64, end: f64) -> f64 {
    let p = progress.clamp(0.0, 1.0);
    start * (1.0 - p) + end * p
}

/// Advantages and returns for one worker's sequence. `dones[t]` marks that
/// step `t` ended an episode; `bootstrap` is the value after the last step.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lam: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "compute_gae: length mismatch");
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * live * next_value - values[t];
        next_adv = delta + gamma * lam * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

#[derive(Debug, Error)]
pub enum GradientError {
    #[error("non-finite loss (policy {policy}, value {value}, entropy {entropy})")]
    NonFinite { policy: f64, value: f64, entropy: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct LossCoeffs {
    pub clip_range: f64,
    pub ent_coeff: f64,
    pub value_coeff: f64,
    pub normalize_advantages: bool,
}

impl From<&TrainConfig> for LossCoeffs {
    fn from(c: &TrainConfig) -> Self {
        Self {
            clip_range: c.clip_range,
            ent_coeff: c.ent_coeff,
            value_coeff: c.value_coeff,
            normalize_advantages: c.normalize_advantages,
        }
    }
}

/// Borrowed training samples, `obs` row-major.
#[derive(Clone, Copy, Debug)]
pub struct Minibatch<'a> {
    pub obs: &'a [f64],
    pub actions: &'a [Action],
    pub old_logprobs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub approx_kl: f64,
}

/// Normalizes to zero mean and unit (population) standard deviation.
pub fn normalize(adv: &[f64], out: &mut Vec<f64>) {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    out.clear();
    out.extend(adv.iter().map(|a| (a - mean) / (std + 1e-8)));
}

/// Composite PPO loss
/// `-mean(min(r A, clip(r) A)) + value_coeff * mean((V - R)^2) - ent_coeff * mean(H)`
/// and, if `grad` is given, its exact gradient (accumulated into `grad`).
pub fn loss_and_gradients(
    net: &Network,
    params: &[f64],
    mb: &Minibatch,
    c: &LossCoeffs,
    ws: &mut Workspace,
    grad: Option<&mut [f64]>,
) -> Result<LossStats, GradientError> {
    let n = mb.len();
    net.forward(params, mb.obs, n, ws);
    let mut adv = Vec::with_capacity(n);
    if c.normalize_advantages && n > 1 {
        normalize(mb.advantages, &mut adv);
    } else {
        adv.extend_from_slice(mb.advantages);
    }
    let inv = 1.0 / n as f64;
    let mut dlogits = vec![0.0; n * N_LOGITS];
    let mut dvalues = vec![0.0; n];
    let (mut pg, mut vl, mut ent, mut clipped, mut kl) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let logits = &ws.logits()[i * N_LOGITS..(i + 1) * N_LOGITS];
        let (logp, h) = logprob_entropy(logits, &mb.actions[i]);
        let diff = logp - mb.old_logprobs[i];
        let ratio = diff.exp();
        let a = adv[i];
        let unclipped = ratio * a;
        let clipped_obj = ratio.clamp(1.0 - c.clip_range, 1.0 + c.clip_range) * a;
        let take_unclipped = unclipped <= clipped_obj;
        pg -= unclipped.min(clipped_obj);
        if (ratio - 1.0).abs() > c.clip_range {
            clipped += 1.0;
        }
        kl += 0.5 * diff * diff;
        ent += h;
        let v = ws.values()[i];
        let err = v - mb.returns[i];
        vl += err * err;
        // d/dlogp of -min(...)/n is -ratio*A/n on the unclipped branch.
        let w_logp = if take_unclipped { -unclipped * inv } else { 0.0 };
        logprob_entropy_grad(logits, &mb.actions[i], w_logp, -c.ent_coeff * inv, &mut dlogits[i * N_LOGITS..(i + 1) * N_LOGITS]);
        dvalues[i] = c.value_coeff * 2.0 * err * inv;
    }
    let stats = LossStats {
        policy_loss: pg * inv,
        value_loss: vl * inv,
        entropy: ent * inv,
        clip_frac: clipped * inv,
        approx_kl: kl * inv,
        loss: pg * inv + c.value_coeff * vl * inv - c.ent_coeff * ent * inv,
    };
    if !stats.loss.is_finite() {
        return Err(GradientError::NonFinite { policy: stats.policy_loss, value: stats.value_loss, entropy: stats.entropy });
    }
    if let Some(g) = grad {
        net.backward(params, ws, &dlogits, &dvalues, g);
    }
    Ok(stats)
}

/// Adam with bias correction; moments kept in 64 bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1, beta2, eps }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = lr * bc2.sqrt() / bc1;
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            // Parameters live in 32 bits.
            *p = (*p - step * *m / (v.sqrt() + self.eps)) as f32 as f64;
        }
    }
}

/// Scales `grad` to at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateLoss {
    /// Means over every minibatch step of the update.
    pub loss: LossStats,
    pub grad_norm: f64,
    pub lr: f64,
    pub explained_variance: f64,
}

/// Runs `n_epochs` passes of shuffled minibatch steps over a finished rollout
/// and writes the new parameters back.
pub fn ppo_update(
    net: &Network,
    params: &mut PolicyParams,
    adam: &mut Adam,
    buf: &RolloutBuffer,
    cfg: &TrainConfig,
    progress: f64,
    shuffle_seed: u64,
) -> Result<UpdateLoss, GradientError> {
    let (adv, ret) = buf.advantages(cfg.gamma, cfg.lam, cfg.reward_scale);
    let obs_len = buf.obs_len;
    let n = buf.len();
    let obs = buf.flat_obs();
    let actions = buf.flat_actions();
    let old_lp = buf.flat_logprobs();
    let coeffs = LossCoeffs::from(cfg);
    let lr = cfg.lr(progress);
    let mut flat = params.to_flat();
    let mut grad = vec![0.0; flat.len()];
    let mut ws = Workspace::default();
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut idx: Vec<usize> = (0..n).collect();
    let mb_size = n / cfg.n_minibatches;
    let (mut mb_obs, mut mb_act, mut mb_lp, mut mb_adv, mut mb_ret) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut sum = LossStats::default();
    let mut gn = 0.0;
    let mut steps = 0usize;
    for _ in 0..cfg.n_epochs {
        idx.shuffle(&mut rng);
        for chunk in idx.chunks_exact(mb_size) {
            mb_obs.clear();
            mb_act.clear();
            mb_lp.clear();
            mb_adv.clear();
            mb_ret.clear();
            for &i in chunk {
                mb_obs.extend_from_slice(&obs[i * obs_len..(i + 1) * obs_len]);
                mb_act.push(actions[i]);
                mb_lp.push(old_lp[i]);
                mb_adv.push(adv[i]);
                mb_ret.push(ret[i]);
            }
            let mb = Minibatch { obs: &mb_obs, actions: &mb_act, old_logprobs: &mb_lp, advantages: &mb_adv, returns: &mb_ret };
            grad.fill(0.0);
            let s = loss_and_gradients(net, &flat, &mb, &coeffs, &mut ws, Some(&mut grad))?;
            gn += clip_grad_norm(&mut grad, cfg.max_grad_norm);
            adam.step(&mut flat, &grad, lr);
            sum.loss += s.loss;
            sum.policy_loss += s.policy_loss;
            sum.value_loss += s.value_loss;
            sum.entropy += s.entropy;
            sum.clip_frac += s.clip_frac;
            sum.approx_kl += s.approx_kl;
            steps += 1;
        }
    }
    params.set_flat(&flat);
    let k = 1.0 / steps.max(1) as f64;
    let loss = LossStats {
        loss: sum.loss * k,
        policy_loss: sum.policy_loss * k,
        value_loss: sum.value_loss * k,
        entropy: sum.entropy * k,
        clip_frac: sum.clip_frac * k,
        approx_kl: sum.approx_kl * k,
    };
    Ok(UpdateLoss { loss, grad_norm: gn * k, lr, explained_variance: explained_variance(&buf.flat_values(), &ret) })
}

/// `1 - Var(returns - values) / Var(returns)`.
pub fn explained_variance(values: &[f64], returns: &[f64]) -> f64 {
    let var = |x: &mut dyn Iterator<Item = f64>, n: f64| {
        let v: Vec<f64> = x.collect();
        let m = v.iter().sum::<f64>() / n;
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n
    };
    let n = returns.len() as f64;
    let vr = var(&mut returns.iter().copied(), n);
    if vr == 0.0 {
        return 0.0;
    }
    1.0 - var(&mut returns.iter().zip(values).map(|(r, v)| r - v), n) / vr
}
