//! Network building blocks. Each layer owns its parameters, gradients, and
//! forward caches; `forward_train` caches what `backward` needs, while
//! `forward_eval` is read-only (running statistics for batch norm, identity
//! for noise).
//!
//! Data layout is channel-first: a sample of shape (c, h, w) is a flat slice
//! with channel `c` occupying a contiguous span of `h * w` values. Dense
//! layers consume the flattened form directly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::activation::{backward_unchecked, forward_unchecked, ActivationKind};
use super::optim::Optimizer;

/// Row-major n x dim batch of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * dim);
        Self { n, dim, data }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { n, dim, data: vec![0.0; n * dim] }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }
}

/// Glorot-uniform weights, biases at 0.5 so pre-sharpened activations start
/// centred in [0,1].
fn init_weights<R: Rng + ?Sized>(rng: &mut R, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-bound..=bound)).collect()
}

const BIAS_INIT: f64 = 0.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// out_dim x in_dim, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(skip)]
    cache_input: Option<Batch>,
    #[serde(skip)]
    pub grad_w: Vec<f64>,
    #[serde(skip)]
    pub grad_b: Vec<f64>,
}

impl DenseLayer {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            in_dim,
            out_dim,
            w: init_weights(rng, out_dim * in_dim, in_dim, out_dim),
            b: vec![BIAS_INIT; out_dim],
            cache_input: None,
            grad_w: Vec::new(),
            grad_b: Vec::new(),
        }
    }

    fn forward(&self, x: &Batch) -> Batch {
        let mut out = Batch::zeros(x.n, self.out_dim);
        for r in 0..x.n {
            let row = x.row(r);
            let out_row = out.row_mut(r);
            for o in 0..self.out_dim {
                let mut acc = self.b[o];
                let w_row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    acc += w_row[i] * row[i];
                }
                out_row[o] = acc;
            }
        }
        out
    }

    fn backward(&mut self, grad_out: &Batch) -> Batch {
        let x = self.cache_input.take().expect("backward without forward_train");
        self.grad_w = vec![0.0; self.w.len()];
        self.grad_b = vec![0.0; self.b.len()];
        let mut grad_in = Batch::zeros(x.n, self.in_dim);
        for r in 0..x.n {
            let g = grad_out.row(r);
            let row = x.row(r);
            let gin = grad_in.row_mut(r);
            for o in 0..self.out_dim {
                let go = g[o];
                self.grad_b[o] += go;
                let w_row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                let gw_row = &mut self.grad_w[o * self.in_dim..(o + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    gw_row[i] += go * row[i];
                    gin[i] += go * w_row[i];
                }
            }
        }
        grad_in
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_c: usize,
    /// Odd filter size; same padding, stride 1.
    pub k: usize,
    /// out_c x in_c x k x k.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(skip)]
    cache_input: Option<Batch>,
    #[serde(skip)]
    pub grad_w: Vec<f64>,
    #[serde(skip)]
    pub grad_b: Vec<f64>,
}

impl ConvLayer {
    pub fn new<R: Rng + ?Sized>(
        in_c: usize,
        in_h: usize,
        in_w: usize,
        out_c: usize,
        k: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = in_c * k * k;
        let fan_out = out_c * k * k;
        Self {
            in_c,
            in_h,
            in_w,
            out_c,
            k,
            w: init_weights(rng, out_c * in_c * k * k, fan_in, fan_out),
            b: vec![BIAS_INIT; out_c],
            cache_input: None,
            grad_w: Vec::new(),
            grad_b: Vec::new(),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.out_c * self.in_h * self.in_w
    }

    fn weight(&self, o: usize, ic: usize, ky: usize, kx: usize) -> f64 {
        self.w[((o * self.in_c + ic) * self.k + ky) * self.k + kx]
    }

    fn forward(&self, x: &Batch) -> Batch {
        let (h, w, k) = (self.in_h, self.in_w, self.k);
        let pad = k / 2;
        let mut out = Batch::zeros(x.n, self.out_dim());
        for r in 0..x.n {
            let row = x.row(r);
            let out_row = out.row_mut(r);
            for o in 0..self.out_c {
                for y in 0..h {
                    for xx in 0..w {
                        let mut acc = self.b[o];
                        for ic in 0..self.in_c {
                            let plane = &row[ic * h * w..(ic + 1) * h * w];
                            for ky in 0..k {
                                let iy = y + ky;
                                if iy < pad || iy - pad >= h {
                                    continue;
                                }
                                let iy = iy - pad;
                                for kx in 0..k {
                                    let ix = xx + kx;
                                    if ix < pad || ix - pad >= w {
                                        continue;
                                    }
                                    acc += self.weight(o, ic, ky, kx) * plane[iy * w + ix - pad];
                                }
                            }
                        }
                        out_row[(o * h + y) * w + xx] = acc;
                    }
                }
            }
        }
        out
    }

    fn backward(&mut self, grad_out: &Batch) -> Batch {
        let x = self.cache_input.take().expect("backward without forward_train");
        let (h, w, k) = (self.in_h, self.in_w, self.k);
        let pad = k / 2;
        self.grad_w = vec![0.0; self.w.len()];
        self.grad_b = vec![0.0; self.b.len()];
        let mut grad_in = Batch::zeros(x.n, x.dim);
        for r in 0..x.n {
            let row = x.row(r);
            let g = grad_out.row(r);
            let gin = grad_in.row_mut(r);
            for o in 0..self.out_c {
                for y in 0..h {
                    for xx in 0..w {
                        let go = g[(o * h + y) * w + xx];
                        if go == 0.0 {
                            continue;
                        }
                        self.grad_b[o] += go;
                        for ic in 0..self.in_c {
                            for ky in 0..k {
                                let iy = y + ky;
                                if iy < pad || iy - pad >= h {
                                    continue;
                                }
                                let iy = iy - pad;
                                for kx in 0..k {
                                    let ix = xx + kx;
                                    if ix < pad || ix - pad >= w {
                                        continue;
                                    }
                                    let ix = ix - pad;
                                    let widx = ((o * self.in_c + ic) * k + ky) * k + kx;
                                    let xidx = (ic * h + iy) * w + ix;
                                    self.grad_w[widx] += go * row[xidx];
                                    gin[xidx] += go * self.w[widx];
                                }
                            }
                        }
                    }
                }
            }
        }
        grad_in
    }
}

/// 2x2 max pooling, stride 2, floor on odd extents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxPoolLayer {
    pub channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    #[serde(skip)]
    cache_argmax: Vec<usize>,
    #[serde(skip)]
    cache_n: usize,
}

impl MaxPoolLayer {
    pub fn new(channels: usize, in_h: usize, in_w: usize) -> Self {
        Self { channels, in_h, in_w, cache_argmax: Vec::new(), cache_n: 0 }
    }

    pub fn out_h(&self) -> usize {
        self.in_h / 2
    }

    pub fn out_w(&self) -> usize {
        self.in_w / 2
    }

    pub fn out_dim(&self) -> usize {
        self.channels * self.out_h() * self.out_w()
    }

    fn forward(&self, x: &Batch, argmax: Option<&mut Vec<usize>>) -> Batch {
        let (h, w) = (self.in_h, self.in_w);
        let (oh, ow) = (self.out_h(), self.out_w());
        let mut out = Batch::zeros(x.n, self.out_dim());
        let mut indices = argmax.map(|v| {
            v.clear();
            v.reserve(x.n * self.out_dim());
            v
        });
        for r in 0..x.n {
            let row = x.row(r);
            let out_row = out.row_mut(r);
            for c in 0..self.channels {
                let plane = &row[c * h * w..(c + 1) * h * w];
                for y in 0..oh {
                    for xx in 0..ow {
                        let mut best_idx = (2 * y) * w + 2 * xx;
                        let mut best = plane[best_idx];
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let idx = (2 * y + dy) * w + 2 * xx + dx;
                                if plane[idx] > best {
                                    best = plane[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out_row[(c * oh + y) * ow + xx] = best;
                        if let Some(v) = indices.as_deref_mut() {
                            v.push(c * h * w + best_idx);
                        }
                    }
                }
            }
        }
        out
    }

    fn backward(&mut self, grad_out: &Batch) -> Batch {
        let mut grad_in = Batch::zeros(self.cache_n, self.channels * self.in_h * self.in_w);
        let out_dim = self.out_dim();
        for r in 0..self.cache_n {
            let g = grad_out.row(r);
            let gin = grad_in.row_mut(r);
            for (j, &src) in self.cache_argmax[r * out_dim..(r + 1) * out_dim].iter().enumerate() {
                gin[src] += g[j];
            }
        }
        grad_in
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNormLayer {
    /// Normalized features: units for dense inputs, channels for conv.
    pub features: usize,
    /// Values per feature per sample (h*w for conv, 1 for dense).
    pub spatial: usize,
    pub momentum: f64,
    pub epsilon: f64,
    pub center: bool,
    pub scale: bool,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    #[serde(skip)]
    cache: Option<BnCache>,
    #[serde(skip)]
    pub grad_gamma: Vec<f64>,
    #[serde(skip)]
    pub grad_beta: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BnCache {
    x_hat: Batch,
    inv_std: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(features: usize, spatial: usize, momentum: f64, epsilon: f64, center: bool, scale: bool) -> Self {
        Self {
            features,
            spatial,
            momentum,
            epsilon,
            center,
            scale,
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            cache: None,
            grad_gamma: Vec::new(),
            grad_beta: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.features * self.spatial
    }

    fn feature_stats(&self, x: &Batch, f: usize) -> (f64, f64) {
        let m = (x.n * self.spatial) as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for r in 0..x.n {
            let span = &x.row(r)[f * self.spatial..(f + 1) * self.spatial];
            for &v in span {
                sum += v;
                sum_sq += v * v;
            }
        }
        let mean = sum / m;
        // Biased (population) variance, floored at 0 against rounding.
        let var = (sum_sq / m - mean * mean).max(0.0);
        (mean, var)
    }

    fn forward_train(&mut self, x: &Batch) -> Batch {
        let mut out = Batch::zeros(x.n, x.dim);
        let mut x_hat = Batch::zeros(x.n, x.dim);
        let mut inv_std = vec![0.0; self.features];
        for f in 0..self.features {
            let (mean, var) = self.feature_stats(x, f);
            let istd = 1.0 / (var + self.epsilon).sqrt();
            inv_std[f] = istd;
            self.running_mean[f] = self.momentum * self.running_mean[f] + (1.0 - self.momentum) * mean;
            self.running_var[f] = self.momentum * self.running_var[f] + (1.0 - self.momentum) * var;
            let gamma = if self.scale { self.gamma[f] } else { 1.0 };
            let beta = if self.center { self.beta[f] } else { 0.0 };
            for r in 0..x.n {
                for s in 0..self.spatial {
                    let idx = f * self.spatial + s;
                    let xh = (x.row(r)[idx] - mean) * istd;
                    x_hat.row_mut(r)[idx] = xh;
                    out.row_mut(r)[idx] = gamma * xh + beta;
                }
            }
        }
        self.cache = Some(BnCache { x_hat, inv_std });
        out
    }

    fn forward_eval(&self, x: &Batch) -> Batch {
        let mut out = Batch::zeros(x.n, x.dim);
        for f in 0..self.features {
            let istd = 1.0 / (self.running_var[f] + self.epsilon).sqrt();
            let gamma = if self.scale { self.gamma[f] } else { 1.0 };
            let beta = if self.center { self.beta[f] } else { 0.0 };
            let mean = self.running_mean[f];
            for r in 0..x.n {
                for s in 0..self.spatial {
                    let idx = f * self.spatial + s;
                    out.row_mut(r)[idx] = gamma * (x.row(r)[idx] - mean) * istd + beta;
                }
            }
        }
        out
    }

    fn backward(&mut self, grad_out: &Batch) -> Batch {
        let cache = self.cache.take().expect("backward without forward_train");
        let n = grad_out.n;
        let m = (n * self.spatial) as f64;
        self.grad_gamma = vec![0.0; self.features];
        self.grad_beta = vec![0.0; self.features];
        let mut grad_in = Batch::zeros(n, grad_out.dim);
        for f in 0..self.features {
            let gamma = if self.scale { self.gamma[f] } else { 1.0 };
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for r in 0..n {
                for s in 0..self.spatial {
                    let idx = f * self.spatial + s;
                    let dy = grad_out.row(r)[idx];
                    sum_dy += dy;
                    sum_dy_xhat += dy * cache.x_hat.row(r)[idx];
                }
            }
            self.grad_beta[f] = sum_dy;
            self.grad_gamma[f] = sum_dy_xhat;
            let istd = cache.inv_std[f];
            for r in 0..n {
                for s in 0..self.spatial {
                    let idx = f * self.spatial + s;
                    let dy = grad_out.row(r)[idx];
                    let xh = cache.x_hat.row(r)[idx];
                    grad_in.row_mut(r)[idx] =
                        gamma * istd * (dy - sum_dy / m - xh * sum_dy_xhat / m);
                }
            }
        }
        grad_in
    }
}

/// Additive zero-mean Gaussian noise, training only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseLayer {
    pub std: f64,
}

impl NoiseLayer {
    pub fn new(std: f64) -> Self {
        Self { std }
    }

    fn forward_train(&self, x: &Batch, rng: &mut ChaCha8Rng) -> Batch {
        let normal = rand_distr::Normal::new(0.0, self.std).expect("std must be finite");
        let mut out = x.clone();
        for v in &mut out.data {
            *v += normal.sample(rng);
        }
        out
    }
}

/// One sharpenable group's activation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivationLayer {
    pub kind: ActivationKind,
    /// 0-based group index, input-to-output order.
    pub group: usize,
    pub sharpness: f64,
    #[serde(skip)]
    cache_input: Option<Batch>,
}

impl ActivationLayer {
    pub fn new(kind: ActivationKind, group: usize) -> Self {
        Self { kind, group, sharpness: 0.0, cache_input: None }
    }

    fn forward(&self, x: &Batch) -> Batch {
        let mut out = x.clone();
        for v in &mut out.data {
            *v = forward_unchecked(self.kind, self.sharpness, *v);
        }
        out
    }

    fn backward(&mut self, grad_out: &Batch) -> Batch {
        let x = self.cache_input.take().expect("backward without forward_train");
        let mut grad_in = grad_out.clone();
        for (g, &xv) in grad_in.data.iter_mut().zip(&x.data) {
            *g *= backward_unchecked(self.kind, self.sharpness, xv);
        }
        grad_in
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Layer {
    Dense(DenseLayer),
    Conv(ConvLayer),
    MaxPool(MaxPoolLayer),
    BatchNorm(BatchNormLayer),
    Noise(NoiseLayer),
    Activation(ActivationLayer),
}

impl Layer {
    pub fn forward_train(&mut self, x: &Batch, rng: &mut ChaCha8Rng) -> Batch {
        match self {
            Layer::Dense(l) => {
                l.cache_input = Some(x.clone());
                l.forward(x)
            }
            Layer::Conv(l) => {
                l.cache_input = Some(x.clone());
                l.forward(x)
            }
            Layer::MaxPool(l) => {
                l.cache_n = x.n;
                let mut argmax = std::mem::take(&mut l.cache_argmax);
                let out = l.forward(x, Some(&mut argmax));
                l.cache_argmax = argmax;
                out
            }
            Layer::BatchNorm(l) => l.forward_train(x),
            Layer::Noise(l) => l.forward_train(x, rng),
            Layer::Activation(l) => {
                l.cache_input = Some(x.clone());
                l.forward(x)
            }
        }
    }

    pub fn forward_eval(&self, x: &Batch) -> Batch {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv(l) => l.forward(x),
            Layer::MaxPool(l) => l.forward(x, None),
            Layer::BatchNorm(l) => l.forward_eval(x),
            Layer::Noise(_) => x.clone(),
            Layer::Activation(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        match self {
            Layer::Dense(l) => l.backward(grad_out),
            Layer::Conv(l) => l.backward(grad_out),
            Layer::MaxPool(l) => l.backward(grad_out),
            Layer::BatchNorm(l) => l.backward(grad_out),
            Layer::Noise(_) => grad_out.clone(),
            Layer::Activation(l) => l.backward(grad_out),
        }
    }

    /// Visit trainable tensors in a fixed order.
    pub fn apply_gradients(&mut self, optim: &mut Optimizer) {
        match self {
            Layer::Dense(l) => {
                optim.update(&mut l.w, &l.grad_w);
                optim.update(&mut l.b, &l.grad_b);
            }
            Layer::Conv(l) => {
                optim.update(&mut l.w, &l.grad_w);
                optim.update(&mut l.b, &l.grad_b);
            }
            Layer::BatchNorm(l) => {
                if l.scale {
                    optim.update(&mut l.gamma, &l.grad_gamma);
                }
                if l.center {
                    optim.update(&mut l.beta, &l.grad_beta);
                }
            }
            Layer::MaxPool(_) | Layer::Noise(_) | Layer::Activation(_) => {}
        }
    }
}
