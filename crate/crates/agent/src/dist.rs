//! Factorized categorical over five blocks of five acceleration levels.

use rand::Rng;
use wbc_core::robot::{Action, DOF, N_LEVELS};

pub const N_LOGITS: usize = DOF * N_LEVELS;

/// Per-block log-softmax.
pub fn log_softmax_blocks(logits: &[f64], out: &mut [f64]) {
    assert_eq!(logits.len(), N_LOGITS);
    for (z, o) in logits.chunks_exact(N_LEVELS).zip(out.chunks_exact_mut(N_LEVELS)) {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        for (o, v) in o.iter_mut().zip(z) {
            *o = v - lse;
        }
    }
}

/// Samples one level per block; returns the action and its log-probability.
pub fn sample_action(logits: &[f64], rng: &mut impl Rng) -> (Action, f64) {
    let mut lp = [0.0; N_LOGITS];
    log_softmax_blocks(logits, &mut lp);
    let mut a = [0u8; DOF];
    let mut total = 0.0;
    for (k, block) in lp.chunks_exact(N_LEVELS).enumerate() {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = N_LEVELS - 1;
        for (i, l) in block.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                pick = i;
                break;
            }
        }
        a[k] = pick as u8;
        total += block[pick];
    }
    (Action(a), total)
}

/// Per-block argmax; ties go to the lower index.
pub fn argmax_action(logits: &[f64]) -> Action {
    assert_eq!(logits.len(), N_LOGITS);
    let mut a = [0u8; DOF];
    for (k, block) in logits.chunks_exact(N_LEVELS).enumerate() {
        let mut best = 0;
        for i in 1..N_LEVELS {
            if block[i] > block[best] {
                best = i;
            }
        }
        a[k] = best as u8;
    }
    Action(a)
}

/// Log-probability of `a` and the summed per-block entropy.
pub fn logprob_entropy(logits: &[f64], a: &Action) -> (f64, f64) {
    let mut lp = [0.0; N_LOGITS];
    log_softmax_blocks(logits, &mut lp);
    let mut logp = 0.0;
    let mut ent = 0.0;
    for (k, block) in lp.chunks_exact(N_LEVELS).enumerate() {
        logp += block[a.0[k] as usize];
        ent -= block.iter().map(|l| l.exp() * l).sum::<f64>();
    }
    (logp, ent)
}

/// Writes `d logp / d logits` scaled by `w_logp` plus `d entropy / d logits`
/// scaled by `w_ent` into `out`, and returns `(logp, entropy)`.
pub fn logprob_entropy_grad(logits: &[f64], a: &Action, w_logp: f64, w_ent: f64, out: &mut [f64]) -> (f64, f64) {
    let mut lp = [0.0; N_LOGITS];
    log_softmax_blocks(logits, &mut lp);
    let mut logp = 0.0;
    let mut ent = 0.0;
    for (k, (block, g)) in lp.chunks_exact(N_LEVELS).zip(out.chunks_exact_mut(N_LEVELS)).enumerate() {
        let chosen = a.0[k] as usize;
        logp += block[chosen];
        let h: f64 = -block.iter().map(|l| l.exp() * l).sum::<f64>();
        ent += h;
        for (i, (g, &l)) in g.iter_mut().zip(block).enumerate() {
            let p = l.exp();
            let onehot = if i == chosen { 1.0 } else { 0.0 };
            *g = w_logp * (onehot - p) - w_ent * p * (l + h);
        }
    }
    (logp, ent)
}
