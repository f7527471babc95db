//! Network architecture description, parameter layout and the named tensor
//! container that checkpoints store.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wbc_core::robot::{DOF, N_LEVELS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Layer sizes of the actor-critic network. One scan branch is applied to
/// both scans with shared weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    /// Beams per scan.
    pub n_beams: usize,
    pub conv1: ConvSpec,
    pub pool1: usize,
    pub conv2: ConvSpec,
    pub pool2: usize,
    /// Output width of the scan branch.
    pub scan_features: usize,
    /// Dense widths applied to the concatenated scan features.
    pub fusion_widths: Vec<usize>,
    /// Setpoint, base velocity, joint positions and joint velocities.
    pub proprio_len: usize,
    /// Dense widths after the proprioceptive concat; the last one feeds both
    /// heads.
    pub trunk_widths: Vec<usize>,
    pub action_blocks: usize,
    pub action_levels: usize,
    /// Negative slope of every hidden activation.
    pub leaky_slope: f64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            n_beams: 64,
            conv1: ConvSpec { channels: 8, kernel: 5, stride: 2 },
            pool1: 2,
            conv2: ConvSpec { channels: 16, kernel: 3, stride: 1 },
            pool2: 2,
            scan_features: 64,
            fusion_widths: vec![128, 96, 64],
            proprio_len: 9,
            trunk_widths: vec![64, 64, 56, 48, 48, 40, 36, 32],
            action_blocks: DOF,
            action_levels: N_LEVELS,
            leaky_slope: 0.01,
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid network spec: {0}")]
pub struct InvalidSpec(pub String);

fn conv_len(input: usize, c: &ConvSpec) -> usize {
    if input < c.kernel {
        0
    } else {
        (input - c.kernel) / c.stride + 1
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), InvalidSpec> {
        let bad = |m: &str| Err(InvalidSpec(m.into()));
        for c in [&self.conv1, &self.conv2] {
            if c.channels == 0 || c.kernel == 0 || c.stride == 0 {
                return bad("convolution sizes must be positive");
            }
        }
        if self.pool1 == 0 || self.pool2 == 0 {
            return bad("pool sizes must be positive");
        }
        if self.flat_len() == 0 {
            return bad("scan too short for the convolution stack");
        }
        if self.scan_features == 0 || self.fusion_widths.contains(&0) || self.trunk_widths.contains(&0) {
            return bad("layer widths must be positive");
        }
        if self.fusion_widths.is_empty() || self.trunk_widths.is_empty() {
            return bad("fusion and trunk need at least one layer each");
        }
        if self.action_blocks != DOF || self.action_levels != N_LEVELS {
            return bad("action head must be 5 blocks of 5 levels");
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0 && self.leaky_slope < 1.0) {
            return bad("leaky_slope must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn conv1_len(&self) -> usize {
        conv_len(self.n_beams, &self.conv1)
    }

    pub fn pool1_len(&self) -> usize {
        self.conv1_len() / self.pool1
    }

    pub fn conv2_len(&self) -> usize {
        conv_len(self.pool1_len(), &self.conv2)
    }

    pub fn pool2_len(&self) -> usize {
        self.conv2_len() / self.pool2
    }

    /// Flattened width after the second pool.
    pub fn flat_len(&self) -> usize {
        self.pool2_len() * self.conv2.channels
    }

    pub fn obs_len(&self) -> usize {
        2 * self.n_beams + self.proprio_len
    }

    pub fn n_logits(&self) -> usize {
        self.action_blocks * self.action_levels
    }

    pub fn fusion_out(&self) -> usize {
        *self.fusion_widths.last().expect("validated spec has a fusion layer")
    }

    /// `(name, shape)` of every tensor in canonical order. Weights are
    /// `[out, in]`; convolution weights are `[out_channels, kernel, in_channels]`.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut v = vec![
            ("scan.conv1.weight".to_string(), vec![self.conv1.channels, self.conv1.kernel, 1]),
            ("scan.conv1.bias".to_string(), vec![self.conv1.channels]),
            (
                "scan.conv2.weight".to_string(),
                vec![self.conv2.channels, self.conv2.kernel, self.conv1.channels],
            ),
            ("scan.conv2.bias".to_string(), vec![self.conv2.channels]),
            ("scan.dense.weight".to_string(), vec![self.scan_features, self.flat_len()]),
            ("scan.dense.bias".to_string(), vec![self.scan_features]),
        ];
        let mut n_in = 2 * self.scan_features;
        for (i, &w) in self.fusion_widths.iter().enumerate() {
            v.push((format!("fusion.{i}.weight"), vec![w, n_in]));
            v.push((format!("fusion.{i}.bias"), vec![w]));
            n_in = w;
        }
        n_in += self.proprio_len;
        for (i, &w) in self.trunk_widths.iter().enumerate() {
            v.push((format!("trunk.{i}.weight"), vec![w, n_in]));
            v.push((format!("trunk.{i}.bias"), vec![w]));
            n_in = w;
        }
        v.push(("actor.weight".to_string(), vec![self.n_logits(), n_in]));
        v.push(("actor.bias".to_string(), vec![self.n_logits()]));
        v.push(("critic.weight".to_string(), vec![1, n_in]));
        v.push(("critic.bias".to_string(), vec![1]));
        v
    }

    pub fn num_params(&self) -> usize {
        self.tensor_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Current checkpoint format version.
pub const PARAMS_VERSION: u32 = 1;

/// Named 32-bit tensors in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub version: u32,
    pub tensors: Vec<Tensor>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("tensor count {found} differs from the expected {expected}")]
    Count { expected: usize, found: usize },
    #[error("tensor {index}: expected {expected_name} {expected:?}, found {found_name} {found:?}")]
    ShapeMismatch {
        index: usize,
        expected_name: String,
        expected: Vec<usize>,
        found_name: String,
        found: Vec<usize>,
    },
    #[error("tensor {0} has {1} values for its shape")]
    Length(String, usize),
    #[error("tensor {0} contains non-finite values")]
    NonFinite(String),
}

impl PolicyParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let tensors = spec
            .tensor_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let n = shape.iter().product();
                Tensor { name, shape, data: vec![0.0; n] }
            })
            .collect();
        Self { version: PARAMS_VERSION, tensors }
    }

    /// Orthogonal weights (gain sqrt(2) hidden, 0.01 actor, 1 critic) and zero
    /// biases.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(spec);
        for t in &mut p.tensors {
            if !t.name.ends_with(".weight") {
                continue;
            }
            let gain = match t.name.as_str() {
                "actor.weight" => 0.01,
                "critic.weight" => 1.0,
                _ => std::f64::consts::SQRT_2,
            };
            let rows = t.shape[0];
            let cols: usize = t.shape[1..].iter().product();
            let w = orthogonal(rows, cols, gain, &mut rng);
            for (d, s) in t.data.iter_mut().zip(w) {
                *d = s as f32;
            }
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn check(&self, spec: &NetworkSpec) -> Result<(), ParamsError> {
        let shapes = spec.tensor_shapes();
        if shapes.len() != self.tensors.len() {
            return Err(ParamsError::Count { expected: shapes.len(), found: self.tensors.len() });
        }
        for (index, ((name, shape), t)) in shapes.iter().zip(&self.tensors).enumerate() {
            if *name != t.name || *shape != t.shape {
                return Err(ParamsError::ShapeMismatch {
                    index,
                    expected_name: name.clone(),
                    expected: shape.clone(),
                    found_name: t.name.clone(),
                    found: t.shape.clone(),
                });
            }
            if t.data.len() != shape.iter().product::<usize>() {
                return Err(ParamsError::Length(t.name.clone(), t.data.len()));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(ParamsError::NonFinite(t.name.clone()));
            }
        }
        Ok(())
    }

    /// Concatenation of all tensors, widened to 64 bits.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        self.write_flat(&mut v);
        v
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        out.clear();
        for t in &self.tensors {
            out.extend(t.data.iter().map(|&x| x as f64));
        }
    }

    /// Overwrites every value from a flat 64-bit vector in canonical order.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut it = flat.iter();
        for t in &mut self.tensors {
            for d in &mut t.data {
                *d = *it.next().expect("length checked") as f32;
            }
        }
    }
}

fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, m) = (rows.max(cols), rows.min(cols));
    let a = DMatrix::<f64>::from_fn(n, m, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    // q is n x m with orthonormal columns; lay it out as rows x cols.
    let mut w = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            w[i * cols + j] = gain * if rows >= cols { q[(i, j)] } else { q[(j, i)] };
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes() {
        let s = NetworkSpec::default();
        assert_eq!(s.conv1_len(), 30);
        assert_eq!(s.pool1_len(), 15);
        assert_eq!(s.conv2_len(), 13);
        assert_eq!(s.pool2_len(), 6);
        assert_eq!(s.flat_len(), 96);
        assert_eq!(s.obs_len(), 137);
        assert!(s.validate().is_ok());
        let p = PolicyParams::init(&s, 0);
        assert_eq!(p.num_params(), s.num_params());
        assert!(p.check(&s).is_ok());
    }

    #[test]
    fn orthogonal_rows_or_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(8, 5), (5, 8), (6, 6)] {
            let w = orthogonal(r, c, 1.0, &mut rng);
            let small = r.min(c);
            for a in 0..small {
                for b in 0..small {
                    let dot: f64 = if r >= c {
                        (0..r).map(|i| w[i * c + a] * w[i * c + b]).sum()
                    } else {
                        (0..c).map(|j| w[a * c + j] * w[b * c + j]).sum()
                    };
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12, "{r}x{c} ({a},{b}) = {dot}");
                }
            }
        }
    }

    #[test]
    fn init_is_seeded() {
        let s = NetworkSpec::default();
        assert_eq!(PolicyParams::init(&s, 4), PolicyParams::init(&s, 4));
        assert_ne!(PolicyParams::init(&s, 4), PolicyParams::init(&s, 5));
        let p = PolicyParams::init(&s, 4);
        assert!(p.get("actor.bias").unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn check_reports_mismatch() {
        let s = NetworkSpec::default();
        let other = NetworkSpec { trunk_widths: vec![64, 32], ..NetworkSpec::default() };
        assert!(matches!(PolicyParams::zeros(&other).check(&s), Err(ParamsError::Count { .. })));
        let wide = NetworkSpec { scan_features: 32, ..NetworkSpec::default() };
        assert!(matches!(PolicyParams::zeros(&wide).check(&s), Err(ParamsError::ShapeMismatch { index: 4, .. })));
    }
}
