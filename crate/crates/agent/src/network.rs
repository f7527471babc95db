//! Batched forward pass and exact reverse-mode gradients of the actor-critic
//! network, computed in 64 bits over a flat parameter vector.
//!
//! Activations are stored row-major with channels last: a scan batch of `n`
//! rows of length `L` with `C` channels is an `(n * L) x C` matrix, so every
//! convolution becomes a patch-matrix product.

use crate::params::NetworkSpec;

fn span(rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

/// `C = A B + beta C` for strided row-major operands.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    (rsc, csc): (usize, usize),
    beta: f64,
) {
    assert!(a.len() >= span(m, k, rsa, csa), "gemm: A too short");
    assert!(b.len() >= span(k, n, rsb, csb), "gemm: B too short");
    assert!(c.len() >= span(m, n, rsc, csc), "gemm: C too short");
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the assertions above keep every strided access in bounds, and
    // `c` is an exclusive borrow that cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// Below this many rows, packing for the blocked product costs more than it
/// saves.
const SMALL_ROWS: usize = 4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `z = x W^T + b` with `W` stored `[n_out, n_in]`.
fn dense_forward(x: &[f64], rows: usize, n_in: usize, w: &[f64], b: &[f64], z: &mut [f64]) {
    let n_out = b.len();
    if rows < SMALL_ROWS {
        for r in 0..rows {
            let xr = &x[r * n_in..(r + 1) * n_in];
            for (o, zo) in z[r * n_out..(r + 1) * n_out].iter_mut().enumerate() {
                *zo = b[o] + dot(xr, &w[o * n_in..(o + 1) * n_in]);
            }
        }
        return;
    }
    for r in 0..rows {
        z[r * n_out..(r + 1) * n_out].copy_from_slice(b);
    }
    gemm(rows, n_in, n_out, x, (n_in, 1), w, (1, n_in), z, (n_out, 1), 1.0);
}

/// Accumulates weight and bias gradients; writes the input gradient if asked.
#[allow(clippy::too_many_arguments)]
fn dense_backward(
    x: &[f64],
    rows: usize,
    n_in: usize,
    w: &[f64],
    n_out: usize,
    dz: &[f64],
    dx: Option<&mut [f64]>,
    dw: &mut [f64],
    db: &mut [f64],
) {
    gemm(n_out, rows, n_in, dz, (1, n_out), x, (n_in, 1), dw, (n_in, 1), 1.0);
    for r in 0..rows {
        for (g, d) in db.iter_mut().zip(&dz[r * n_out..(r + 1) * n_out]) {
            *g += d;
        }
    }
    if let Some(dx) = dx {
        gemm(rows, n_out, n_in, dz, (n_out, 1), w, (n_in, 1), dx, (n_in, 1), 0.0);
    }
}

fn leaky(z: &[f64], a: &mut [f64], slope: f64) {
    for (a, &z) in a.iter_mut().zip(z) {
        *a = if z > 0.0 { z } else { slope * z };
    }
}

/// `dz = da * leaky'(z)`, in place over `da`.
fn leaky_backward(z: &[f64], da: &mut [f64], slope: f64) {
    for (d, &z) in da.iter_mut().zip(z) {
        if z <= 0.0 {
            *d *= slope;
        }
    }
}

/// Patch matrix for a channels-last sequence: row `(sample, t)` holds input
/// rows `stride * t .. stride * t + kernel`, each `channels` wide.
#[allow(clippy::too_many_arguments)]
fn im2col(x: &[f64], n: usize, len: usize, ch: usize, kernel: usize, stride: usize, out_len: usize, p: &mut [f64]) {
    let w = kernel * ch;
    for s in 0..n {
        for t in 0..out_len {
            let src = (s * len + stride * t) * ch;
            let dst = (s * out_len + t) * w;
            p[dst..dst + w].copy_from_slice(&x[src..src + w]);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn col2im_add(dp: &[f64], n: usize, len: usize, ch: usize, kernel: usize, stride: usize, out_len: usize, dx: &mut [f64]) {
    let w = kernel * ch;
    for s in 0..n {
        for t in 0..out_len {
            let dst = (s * len + stride * t) * ch;
            let src = (s * out_len + t) * w;
            for (d, g) in dx[dst..dst + w].iter_mut().zip(&dp[src..src + w]) {
                *d += g;
            }
        }
    }
}

/// Non-overlapping max pool along the sequence axis; trailing rows that do
/// not fill a window are dropped. Ties pick the earliest row.
#[allow(clippy::too_many_arguments)]
fn max_pool(x: &[f64], n: usize, len: usize, ch: usize, pool: usize, out_len: usize, y: &mut [f64], idx: &mut [u32]) {
    for s in 0..n {
        for t in 0..out_len {
            for c in 0..ch {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for k in 0..pool {
                    let row = t * pool + k;
                    let v = x[(s * len + row) * ch + c];
                    if v > best {
                        best = v;
                        arg = row;
                    }
                }
                let o = (s * out_len + t) * ch + c;
                y[o] = best;
                idx[o] = (s * len + arg) as u32;
            }
        }
    }
}

fn max_pool_backward(dy: &[f64], idx: &[u32], ch: usize, dx: &mut [f64]) {
    dx.fill(0.0);
    for (o, (&g, &row)) in dy.iter().zip(idx).enumerate() {
        dx[row as usize * ch + o % ch] += g;
    }
}

#[derive(Clone, Copy, Debug)]
struct DenseLayer {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
}

impl DenseLayer {
    fn weights<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        (&p[self.w..self.w + self.n_in * self.n_out], &p[self.b..self.b + self.n_out])
    }
}

/// Offsets of every layer into the flat parameter vector.
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    conv1: DenseLayer,
    conv2: DenseLayer,
    scan_dense: DenseLayer,
    fusion: Vec<DenseLayer>,
    trunk: Vec<DenseLayer>,
    actor: DenseLayer,
    critic: DenseLayer,
    n_params: usize,
}

/// Buffers for one batch size; reused across calls without reallocating.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    batch: usize,
    x_scan: Vec<f64>,
    p1: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    q1: Vec<f64>,
    i1: Vec<u32>,
    p2: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    q2: Vec<f64>,
    i2: Vec<u32>,
    z3: Vec<f64>,
    a3: Vec<f64>,
    /// Input, pre-activation and activation of each fusion and trunk layer.
    mlp_in: Vec<Vec<f64>>,
    mlp_z: Vec<Vec<f64>>,
    mlp_a: Vec<Vec<f64>>,
    logits: Vec<f64>,
    values: Vec<f64>,
    // Gradient scratch.
    g_a: Vec<f64>,
    g_b: Vec<f64>,
}

impl Workspace {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Every hidden pre-activation, in a fixed order. Used to detect
    /// finite-difference steps that cross an activation kink.
    pub fn pre_activations(&self) -> impl Iterator<Item = f64> + '_ {
        self.z1
            .iter()
            .chain(&self.z2)
            .chain(&self.z3)
            .chain(self.mlp_z.iter().flatten())
            .copied()
    }

    /// Winning rows of both pooling layers.
    pub fn pool_choices(&self) -> impl Iterator<Item = u32> + '_ {
        self.i1.iter().chain(&self.i2).copied()
    }
}

fn resize<T: Clone + Default>(v: &mut Vec<T>, n: usize) {
    v.resize(n, T::default());
}

impl Network {
    pub fn new(spec: &NetworkSpec) -> Self {
        let mut off = 0;
        let mut layer = |n_out: usize, n_in: usize| {
            let l = DenseLayer { w: off, b: off + n_out * n_in, n_in, n_out };
            off += n_out * n_in + n_out;
            l
        };
        let conv1 = layer(spec.conv1.channels, spec.conv1.kernel);
        let conv2 = layer(spec.conv2.channels, spec.conv2.kernel * spec.conv1.channels);
        let scan_dense = layer(spec.scan_features, spec.flat_len());
        let mut n_in = 2 * spec.scan_features;
        let fusion = spec
            .fusion_widths
            .iter()
            .map(|&w| {
                let l = layer(w, n_in);
                n_in = w;
                l
            })
            .collect();
        n_in += spec.proprio_len;
        let trunk = spec
            .trunk_widths
            .iter()
            .map(|&w| {
                let l = layer(w, n_in);
                n_in = w;
                l
            })
            .collect();
        let actor = layer(spec.n_logits(), n_in);
        let critic = layer(1, n_in);
        Self { spec: spec.clone(), conv1, conv2, scan_dense, fusion, trunk, actor, critic, n_params: off }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.n_params
    }

    fn mlp_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.fusion.iter().chain(&self.trunk)
    }

    fn prepare(&self, ws: &mut Workspace, b: usize) {
        let s = &self.spec;
        let n2 = 2 * b;
        let (c1, c2) = (s.conv1.channels, s.conv2.channels);
        ws.batch = b;
        resize(&mut ws.x_scan, n2 * s.n_beams);
        resize(&mut ws.p1, n2 * s.conv1_len() * s.conv1.kernel);
        resize(&mut ws.z1, n2 * s.conv1_len() * c1);
        resize(&mut ws.a1, n2 * s.conv1_len() * c1);
        resize(&mut ws.q1, n2 * s.pool1_len() * c1);
        resize(&mut ws.i1, n2 * s.pool1_len() * c1);
        resize(&mut ws.p2, n2 * s.conv2_len() * s.conv2.kernel * c1);
        resize(&mut ws.z2, n2 * s.conv2_len() * c2);
        resize(&mut ws.a2, n2 * s.conv2_len() * c2);
        resize(&mut ws.q2, n2 * s.pool2_len() * c2);
        resize(&mut ws.i2, n2 * s.pool2_len() * c2);
        resize(&mut ws.z3, n2 * s.scan_features);
        resize(&mut ws.a3, n2 * s.scan_features);
        let n_mlp = self.fusion.len() + self.trunk.len();
        ws.mlp_in.resize_with(n_mlp, Vec::new);
        ws.mlp_z.resize_with(n_mlp, Vec::new);
        ws.mlp_a.resize_with(n_mlp, Vec::new);
        for (i, l) in self.fusion.iter().chain(&self.trunk).enumerate() {
            resize(&mut ws.mlp_in[i], b * l.n_in);
            resize(&mut ws.mlp_z[i], b * l.n_out);
            resize(&mut ws.mlp_a[i], b * l.n_out);
        }
        resize(&mut ws.logits, b * s.n_logits());
        resize(&mut ws.values, b);
    }

    /// Runs `batch` observations (row-major, `obs_len` each). Results are
    /// left in `ws.logits()` and `ws.values()`.
    pub fn forward(&self, params: &[f64], obs: &[f64], batch: usize, ws: &mut Workspace) {
        let s = &self.spec;
        assert_eq!(params.len(), self.n_params, "parameter vector length");
        assert_eq!(obs.len(), batch * s.obs_len(), "observation batch length");
        self.prepare(ws, batch);
        let nb = s.n_beams;
        let olen = s.obs_len();
        let n2 = 2 * batch;
        let slope = s.leaky_slope;

        // Front scans fill rows 0..batch, rear scans rows batch..2*batch.
        for i in 0..batch {
            let o = &obs[i * olen..(i + 1) * olen];
            ws.x_scan[i * nb..(i + 1) * nb].copy_from_slice(&o[..nb]);
            ws.x_scan[(batch + i) * nb..(batch + i + 1) * nb].copy_from_slice(&o[nb..2 * nb]);
        }

        let (c1, c2) = (s.conv1.channels, s.conv2.channels);
        let (l1, q1, l2, q2) = (s.conv1_len(), s.pool1_len(), s.conv2_len(), s.pool2_len());
        im2col(&ws.x_scan, n2, nb, 1, s.conv1.kernel, s.conv1.stride, l1, &mut ws.p1);
        let (w, b) = self.conv1.weights(params);
        dense_forward(&ws.p1, n2 * l1, self.conv1.n_in, w, b, &mut ws.z1);
        leaky(&ws.z1, &mut ws.a1, slope);
        max_pool(&ws.a1, n2, l1, c1, s.pool1, q1, &mut ws.q1, &mut ws.i1);

        im2col(&ws.q1, n2, q1, c1, s.conv2.kernel, s.conv2.stride, l2, &mut ws.p2);
        let (w, b) = self.conv2.weights(params);
        dense_forward(&ws.p2, n2 * l2, self.conv2.n_in, w, b, &mut ws.z2);
        leaky(&ws.z2, &mut ws.a2, slope);
        max_pool(&ws.a2, n2, l2, c2, s.pool2, q2, &mut ws.q2, &mut ws.i2);

        let (w, b) = self.scan_dense.weights(params);
        dense_forward(&ws.q2, n2, s.flat_len(), w, b, &mut ws.z3);
        leaky(&ws.z3, &mut ws.a3, slope);

        let f = s.scan_features;
        let nf = self.fusion.len();
        {
            let x = &mut ws.mlp_in[0];
            for i in 0..batch {
                x[i * 2 * f..i * 2 * f + f].copy_from_slice(&ws.a3[i * f..(i + 1) * f]);
                x[i * 2 * f + f..(i + 1) * 2 * f].copy_from_slice(&ws.a3[(batch + i) * f..(batch + i + 1) * f]);
            }
        }
        for k in 0..nf + self.trunk.len() {
            let l = if k < nf { &self.fusion[k] } else { &self.trunk[k - nf] };
            if k > 0 {
                let (src, dst) = (&ws.mlp_a[k - 1], &mut ws.mlp_in[k]);
                if k == nf {
                    // Proprioceptive entries join after the fusion stack.
                    let fw = l.n_in - s.proprio_len;
                    for i in 0..batch {
                        dst[i * l.n_in..i * l.n_in + fw].copy_from_slice(&src[i * fw..(i + 1) * fw]);
                        dst[i * l.n_in + fw..(i + 1) * l.n_in].copy_from_slice(&obs[i * olen + 2 * nb..(i + 1) * olen]);
                    }
                } else {
                    dst.copy_from_slice(src);
                }
            }
            let (w, b) = l.weights(params);
            dense_forward(&ws.mlp_in[k], batch, l.n_in, w, b, &mut ws.mlp_z[k]);
            leaky(&ws.mlp_z[k], &mut ws.mlp_a[k], slope);
        }
        let last = ws.mlp_a.last().expect("trunk is nonempty");
        let (w, b) = self.actor.weights(params);
        dense_forward(last, batch, self.actor.n_in, w, b, &mut ws.logits);
        let (w, b) = self.critic.weights(params);
        dense_forward(last, batch, self.critic.n_in, w, b, &mut ws.values);
    }

    /// Accumulates into `grad` the gradient of a scalar loss whose partial
    /// derivatives w.r.t. the outputs of the last `forward` are `dlogits` and
    /// `dvalues`.
    pub fn backward(&self, params: &[f64], ws: &mut Workspace, dlogits: &[f64], dvalues: &[f64], grad: &mut [f64]) {
        let s = &self.spec;
        let batch = ws.batch;
        assert_eq!(grad.len(), self.n_params, "gradient vector length");
        assert_eq!(dlogits.len(), batch * s.n_logits());
        assert_eq!(dvalues.len(), batch);
        let slope = s.leaky_slope;
        let n2 = 2 * batch;

        let layers: Vec<DenseLayer> = self.mlp_layers().copied().collect();
        let nl = layers.len();
        let top = layers[nl - 1].n_out;
        // Head gradients into the last trunk activation.
        resize(&mut ws.g_a, batch * top);
        {
            let last = &ws.mlp_a[nl - 1];
            let (w, _) = self.actor.weights(params);
            let (gw, gb) = split_grad(grad, &self.actor);
            dense_backward(last, batch, top, w, self.actor.n_out, dlogits, Some(&mut ws.g_a), gw, gb);
            resize(&mut ws.g_b, batch * top);
            let (w, _) = self.critic.weights(params);
            let (gw, gb) = split_grad(grad, &self.critic);
            dense_backward(last, batch, top, w, 1, dvalues, Some(&mut ws.g_b), gw, gb);
            for (a, b) in ws.g_a.iter_mut().zip(&ws.g_b) {
                *a += b;
            }
        }

        let nf = self.fusion.len();
        let olen_p = s.proprio_len;
        for k in (0..nl).rev() {
            let l = layers[k];
            leaky_backward(&ws.mlp_z[k], &mut ws.g_a, slope);
            resize(&mut ws.g_b, batch * l.n_in);
            let (w, _) = l.weights(params);
            let (gw, gb) = split_grad(grad, &l);
            dense_backward(&ws.mlp_in[k], batch, l.n_in, w, l.n_out, &ws.g_a, Some(&mut ws.g_b), gw, gb);
            if k == nf {
                // Drop the proprioceptive columns.
                let fw = l.n_in - olen_p;
                for i in 0..batch {
                    ws.g_b.copy_within(i * l.n_in..i * l.n_in + fw, i * fw);
                }
                ws.g_b.truncate(batch * fw);
            }
            std::mem::swap(&mut ws.g_a, &mut ws.g_b);
        }
        // g_a now holds d(fusion input), `batch x 2F`; scatter to branch rows.
        let f = s.scan_features;
        let mut d3 = vec![0.0; n2 * f];
        for i in 0..batch {
            d3[i * f..(i + 1) * f].copy_from_slice(&ws.g_a[i * 2 * f..i * 2 * f + f]);
            d3[(batch + i) * f..(batch + i + 1) * f].copy_from_slice(&ws.g_a[i * 2 * f + f..(i + 1) * 2 * f]);
        }
        leaky_backward(&ws.z3, &mut d3, slope);
        let mut dq2 = vec![0.0; ws.q2.len()];
        let (w, _) = self.scan_dense.weights(params);
        let (gw, gb) = split_grad(grad, &self.scan_dense);
        dense_backward(&ws.q2, n2, s.flat_len(), w, f, &d3, Some(&mut dq2), gw, gb);

        let (c1, c2) = (s.conv1.channels, s.conv2.channels);
        let (l1, q1, l2) = (s.conv1_len(), s.pool1_len(), s.conv2_len());
        let mut da2 = vec![0.0; ws.a2.len()];
        max_pool_backward(&dq2, &ws.i2, c2, &mut da2);
        leaky_backward(&ws.z2, &mut da2, slope);
        let mut dp2 = vec![0.0; ws.p2.len()];
        let (w, _) = self.conv2.weights(params);
        let (gw, gb) = split_grad(grad, &self.conv2);
        dense_backward(&ws.p2, n2 * l2, self.conv2.n_in, w, c2, &da2, Some(&mut dp2), gw, gb);
        let mut dq1 = vec![0.0; ws.q1.len()];
        col2im_add(&dp2, n2, q1, c1, s.conv2.kernel, s.conv2.stride, l2, &mut dq1);

        let mut da1 = vec![0.0; ws.a1.len()];
        max_pool_backward(&dq1, &ws.i1, c1, &mut da1);
        leaky_backward(&ws.z1, &mut da1, slope);
        let (w, _) = self.conv1.weights(params);
        let (gw, gb) = split_grad(grad, &self.conv1);
        dense_backward(&ws.p1, n2 * l1, self.conv1.n_in, w, c1, &da1, None, gw, gb);
    }
}

fn split_grad<'a>(grad: &'a mut [f64], l: &DenseLayer) -> (&'a mut [f64], &'a mut [f64]) {
    let (w, rest) = grad[l.w..l.b + l.n_out].split_at_mut(l.n_in * l.n_out);
    (w, rest)
}
