//! Central finite-difference check of the composite loss gradient.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbc_agent::network::{Network, Workspace};
use wbc_agent::params::{NetworkSpec, PolicyParams};
use wbc_agent::ppo::{loss_and_gradients, LossCoeffs, Minibatch};
use wbc_core::robot::Action;

pub struct Problem {
    pub net: Network,
    pub params: Vec<f64>,
    pub obs: Vec<f64>,
    pub actions: Vec<Action>,
    pub old_logprobs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub coeffs: LossCoeffs,
}

impl Problem {
    pub fn random(seed: u64, batch: usize) -> Self {
        let spec = NetworkSpec::default();
        let net = Network::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Larger-than-default head gains so every loss term carries weight.
        let mut params = PolicyParams::init(&spec, seed).to_flat();
        for p in params.iter_mut() {
            *p += rng.random_range(-0.05..0.05);
        }
        let obs: Vec<f64> = (0..batch * spec.obs_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let actions: Vec<Action> = (0..batch).map(|_| Action(std::array::from_fn(|_| rng.random_range(0..5)))).collect();
        let mut ws = Workspace::default();
        net.forward(&params, &obs, batch, &mut ws);
        // Old log-probabilities offset so some ratios sit well inside the
        // clip range and some well outside, away from the clip boundaries.
        let old_logprobs = (0..batch)
            .map(|i| {
                let (lp, _) = wbc_agent::dist::logprob_entropy(&ws.logits()[i * 25..(i + 1) * 25], &actions[i]);
                lp + [0.0, 0.05, -0.05, 0.6, -0.6][i % 5]
            })
            .collect();
        let advantages = (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect();
        let returns = (0..batch).map(|_| rng.random_range(-3.0..3.0)).collect();
        let coeffs = LossCoeffs { clip_range: 0.2, ent_coeff: 0.05, value_coeff: 0.5, normalize_advantages: true };
        Self { net, params, obs, actions, old_logprobs, advantages, returns, coeffs }
    }

    fn minibatch(&self) -> Minibatch<'_> {
        Minibatch {
            obs: &self.obs,
            actions: &self.actions,
            old_logprobs: &self.old_logprobs,
            advantages: &self.advantages,
            returns: &self.returns,
        }
    }

    pub fn loss(&self, params: &[f64], ws: &mut Workspace) -> f64 {
        loss_and_gradients(&self.net, params, &self.minibatch(), &self.coeffs, ws, None).unwrap().loss
    }

    pub fn gradient(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.params.len()];
        let mut ws = Workspace::default();
        loss_and_gradients(&self.net, &self.params, &self.minibatch(), &self.coeffs, &mut ws, Some(&mut g)).unwrap();
        g
    }

    /// Activation pattern: signs of all pre-activations and pooling winners.
    fn pattern(&self, params: &[f64], ws: &mut Workspace) -> (Vec<bool>, Vec<u32>) {
        self.net.forward(params, &self.obs, self.actions.len(), ws);
        (ws.pre_activations().map(|z| z > 0.0).collect(), ws.pool_choices().collect())
    }
}

pub struct CheckOutcome {
    pub checked: usize,
    pub skipped_kinks: usize,
    pub worst_rel_err: f64,
    pub worst_index: usize,
    /// Parameter-name prefixes that were sampled.
    pub layers: std::collections::BTreeSet<String>,
}

fn layer_of(spec: &NetworkSpec, index: usize) -> String {
    let mut off = 0;
    for (name, shape) in spec.tensor_shapes() {
        let n: usize = shape.iter().product();
        if index < off + n {
            return name;
        }
        off += n;
    }
    unreachable!("index within parameter vector")
}

/// Samples `n` parameters (cycling so every tensor is covered), compares the
/// analytic derivative with `(L(p+h) - L(p-h)) / 2h`. Samples whose
/// perturbation flips any activation kink or pooling winner are redrawn.
pub fn check(problem: &Problem, n: usize, h: f64, seed: u64) -> CheckOutcome {
    let spec = problem.net.spec().clone();
    let shapes = spec.tensor_shapes();
    let mut offsets = Vec::new();
    let mut off = 0;
    for (_, s) in &shapes {
        let len: usize = s.iter().product();
        offsets.push((off, len));
        off += len;
    }
    let grad = problem.gradient();
    let mut ws = Workspace::default();
    let base = problem.pattern(&problem.params, &mut ws);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CheckOutcome {
        checked: 0,
        skipped_kinks: 0,
        worst_rel_err: 0.0,
        worst_index: 0,
        layers: Default::default(),
    };
    let mut p = problem.params.clone();
    let mut tensor = 0;
    while out.checked < n {
        let (o, len) = offsets[tensor % offsets.len()];
        let i = o + rng.random_range(0..len);
        let orig = p[i];
        p[i] = orig + h;
        let plus_pattern = problem.pattern(&p, &mut ws);
        let lp = problem.loss(&p, &mut ws);
        p[i] = orig - h;
        let minus_pattern = problem.pattern(&p, &mut ws);
        let lm = problem.loss(&p, &mut ws);
        p[i] = orig;
        if plus_pattern != base || minus_pattern != base {
            out.skipped_kinks += 1;
            assert!(out.skipped_kinks < 20 * n, "too many kink crossings");
            continue;
        }
        tensor += 1;
        let fd = (lp - lm) / (2.0 * h);
        let a = grad[i];
        let rel = (fd - a).abs() / (fd.abs().max(a.abs())).max(1e-7);
        if rel > out.worst_rel_err {
            out.worst_rel_err = rel;
            out.worst_index = i;
        }
        out.layers.insert(layer_of(&spec, i));
        out.checked += 1;
    }
    out
}
