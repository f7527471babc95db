//! Single-observation inference wrapper and the inference-rate benchmark.

use crate::dist::{argmax_action, sample_action};
use crate::network::{Network, Workspace};
use crate::params::{NetworkSpec, PolicyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use wbc_core::robot::Action;

/// A parameter snapshot with its own scratch buffers. After the first call
/// no further allocation happens.
#[derive(Clone, Debug)]
pub struct Policy {
    net: Network,
    params: Vec<f64>,
    ws: Workspace,
}

impl Policy {
    pub fn new(spec: &NetworkSpec, params: &PolicyParams) -> Self {
        Self { net: Network::new(spec), params: params.to_flat(), ws: Workspace::default() }
    }

    pub fn spec(&self) -> &NetworkSpec {
        self.net.spec()
    }

    /// Logits and value for one observation.
    pub fn forward(&mut self, obs: &[f64]) -> (&[f64], f64) {
        self.net.forward(&self.params, obs, 1, &mut self.ws);
        (self.ws.logits(), self.ws.values()[0])
    }

    /// Greedy action: per-block argmax.
    pub fn act(&mut self, obs: &[f64]) -> Action {
        argmax_action(self.forward(obs).0)
    }

    pub fn sample(&mut self, obs: &[f64], rng: &mut impl Rng) -> (Action, f64) {
        let logits = self.forward(obs).0;
        sample_action(logits, rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchResult {
    pub iterations: usize,
    pub seconds: f64,
    pub hz: f64,
    pub mean_latency_us: f64,
    pub p99_latency_us: f64,
}

/// Times `iterations` single-threaded greedy forward passes on random
/// observations.
pub fn bench_inference(spec: &NetworkSpec, params: &PolicyParams, iterations: usize, seed: u64) -> BenchResult {
    let mut policy = Policy::new(spec, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.obs_len();
    let observations: Vec<Vec<f64>> = (0..16).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    for o in &observations {
        policy.act(o);
    }
    let mut checksum = 0u64;
    let mut latencies = Vec::with_capacity(iterations);
    let t = Instant::now();
    for i in 0..iterations {
        let t_i = Instant::now();
        let a = policy.act(&observations[i % observations.len()]);
        latencies.push(t_i.elapsed().as_secs_f64());
        checksum = checksum.wrapping_add(a.0[0] as u64);
    }
    let seconds = t.elapsed().as_secs_f64();
    std::hint::black_box(checksum);
    latencies.sort_by(f64::total_cmp);
    let p99 = latencies.get((iterations * 99).div_ceil(100).saturating_sub(1)).copied().unwrap_or(0.0);
    BenchResult {
        iterations,
        seconds,
        hz: iterations as f64 / seconds,
        mean_latency_us: seconds * 1e6 / iterations as f64,
        p99_latency_us: p99 * 1e6,
    }
}
