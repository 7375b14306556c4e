//! Small fully connected networks with manual backpropagation.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    Dense,
    Resex,
    DenseLs,
    DenseResidual,
    DenseStrongreg,
}

impl ArchKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "dense" => ArchKind::Dense,
            "resex" => ArchKind::Resex,
            "dense_ls" => ArchKind::DenseLs,
            "dense_residual" => ArchKind::DenseResidual,
            "dense_strongreg" => ArchKind::DenseStrongreg,
            other => return Err(Error::param("arch", format!("unknown architecture `{other}`"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Dense => "dense",
            ArchKind::Resex => "resex",
            ArchKind::DenseLs => "dense_ls",
            ArchKind::DenseResidual => "dense_residual",
            ArchKind::DenseStrongreg => "dense_strongreg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub kind: ArchKind,
    /// Widths of the two hidden layers of the dense variants; resex and
    /// dense_residual use only the second.
    pub hidden: (usize, usize),
    pub resex_alpha: f64,
    pub degree: usize,
    /// Train the masked sparse weights instead of the fixed `mask / degree` branch.
    pub trainable_sparse: bool,
    pub label_smoothing: f64,
    pub l2_lambda: f64,
}

impl ArchConfig {
    pub fn new(kind: ArchKind) -> Self {
        ArchConfig {
            kind,
            hidden: (128, 64),
            resex_alpha: 0.25,
            degree: 3,
            trainable_sparse: false,
            label_smoothing: if kind == ArchKind::DenseLs { 0.1 } else { 0.0 },
            l2_lambda: if kind == ArchKind::DenseStrongreg { 0.01 } else { 0.0 },
        }
    }

    pub fn resex(alpha: f64) -> Self {
        ArchConfig {
            resex_alpha: alpha,
            ..Self::new(ArchKind::Resex)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.0 == 0 || self.hidden.1 == 0 {
            return Err(Error::param("hidden", "widths must be positive"));
        }
        if !(self.resex_alpha >= 0.0 && self.resex_alpha.is_finite()) {
            return Err(Error::param("resex_alpha", "must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::param("label_smoothing", "must lie in [0, 1)"));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::param("l2_lambda", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Square 0/1 mask with exactly `degree` distinct ones per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMask {
    pub dim: usize,
    pub degree: usize,
    /// Column indices of each row, ascending.
    pub rows: Vec<Vec<usize>>,
}

impl SparseMask {
    pub fn density(&self) -> f64 {
        self.degree as f64 / self.dim as f64
    }

    pub fn dense(&self) -> Vec<bool> {
        let mut m = vec![false; self.dim * self.dim];
        for (i, cols) in self.rows.iter().enumerate() {
            for &j in cols {
                m[i * self.dim + j] = true;
            }
        }
        m
    }
}

pub fn build_mask(dim: usize, degree: usize, seed: u64) -> Result<SparseMask> {
    if degree == 0 || degree >= dim {
        return Err(Error::param("degree", format!("need 0 < degree < dim, got degree {degree}, dim {dim}")));
    }
    let mut g = rng::stream(seed);
    let rows = (0..dim)
        .map(|_| {
            let mut cols = index::sample(&mut g, dim, degree).into_vec();
            cols.sort_unstable();
            cols
        })
        .collect();
    Ok(SparseMask { dim, degree, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    pub trainable: bool,
    /// Weight matrices take the L2 penalty; biases do not.
    pub penalized: bool,
    pub mask: Option<Vec<bool>>,
}

impl Param {
    fn new(value: Vec<f64>, trainable: bool, penalized: bool, mask: Option<Vec<bool>>) -> Self {
        let n = value.len();
        Param {
            value,
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
            trainable,
            penalized,
            mask,
        }
    }

    pub fn active(&self, k: usize) -> bool {
        self.trainable && self.mask.as_ref().map_or(true, |m| m[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Layer {
    /// `z = W x + b`, optionally followed by ReLU.
    Linear { w: usize, b: usize, n_in: usize, n_out: usize, relu: bool },
    /// `h = x + alpha * ReLU(W x + b)`, width preserving.
    Residual { w: usize, b: Option<usize>, dim: usize, alpha: f64 },
}

/// Activations kept from a forward pass for backpropagation.
pub struct Cache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub(crate) params: Vec<Param>,
    layers: Vec<Layer>,
    pub n_classes: usize,
    pub label_smoothing: f64,
    pub l2_lambda: f64,
    pub mask: Option<SparseMask>,
    adam_t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

fn he_normal<R: Rng + ?Sized>(n: usize, fan_in: usize, g: &mut R) -> Vec<f64> {
    let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    (0..n).map(|_| dist.sample(g)).collect()
}

impl Network {
    pub fn new(arch: &ArchConfig, dim: usize, n_classes: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        if dim == 0 || n_classes < 2 {
            return Err(Error::param("shape", "need dim >= 1 and at least 2 classes"));
        }
        let mut g = rng::stream(seed);
        let mut params = Vec::new();
        let mut layers = Vec::new();
        let linear = |params: &mut Vec<Param>, g: &mut rng::StreamRng, n_in: usize, n_out: usize, relu: bool| {
            params.push(Param::new(he_normal(n_in * n_out, n_in, g), true, true, None));
            params.push(Param::new(vec![0.0; n_out], true, false, None));
            Layer::Linear {
                w: params.len() - 2,
                b: params.len() - 1,
                n_in,
                n_out,
                relu,
            }
        };
        let (h1, h2) = arch.hidden;
        let mut mask = None;
        match arch.kind {
            ArchKind::Dense | ArchKind::DenseLs | ArchKind::DenseStrongreg => {
                layers.push(linear(&mut params, &mut g, dim, h1, true));
                layers.push(linear(&mut params, &mut g, h1, h2, true));
            }
            ArchKind::Resex => {
                let m = build_mask(dim, arch.degree, rng::mix_seed(seed, 0x6d61736b, 0))?;
                let dense = m.dense();
                let w = if arch.trainable_sparse {
                    let init = he_normal(dim * dim, arch.degree, &mut g);
                    init.iter().zip(&dense).map(|(v, &on)| if on { *v } else { 0.0 }).collect()
                } else {
                    dense.iter().map(|&on| if on { 1.0 / arch.degree as f64 } else { 0.0 }).collect()
                };
                params.push(Param::new(w, arch.trainable_sparse, arch.trainable_sparse, Some(dense)));
                layers.push(Layer::Residual {
                    w: params.len() - 1,
                    b: None,
                    dim,
                    alpha: arch.resex_alpha,
                });
                layers.push(linear(&mut params, &mut g, dim, h2, true));
                mask = Some(m);
            }
            ArchKind::DenseResidual => {
                params.push(Param::new(he_normal(dim * dim, dim, &mut g), true, true, None));
                params.push(Param::new(vec![0.0; dim], true, false, None));
                layers.push(Layer::Residual {
                    w: params.len() - 2,
                    b: Some(params.len() - 1),
                    dim,
                    alpha: 1.0,
                });
                layers.push(linear(&mut params, &mut g, dim, h2, true));
            }
        }
        layers.push(linear(&mut params, &mut g, h2, n_classes, false));
        Ok(Network {
            params,
            layers,
            n_classes,
            label_smoothing: arch.label_smoothing,
            l2_lambda: arch.l2_lambda,
            mask,
            adam_t: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self.layers[0] {
            Layer::Linear { n_in, .. } => n_in,
            Layer::Residual { dim, .. } => dim,
        }
    }

    fn matvec(&self, w: usize, b: Option<usize>, x: &[f64], n_out: usize) -> Vec<f64> {
        let wv = &self.params[w].value;
        let n_in = x.len();
        (0..n_out)
            .map(|i| {
                let row = &wv[i * n_in..(i + 1) * n_in];
                let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                s + b.map_or(0.0, |b| self.params[b].value[i])
            })
            .collect()
    }

    /// Logits for one input, with the activations needed by [`Network::backward`].
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Cache) {
        let mut cache = Cache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.to_vec();
        for layer in &self.layers {
            let next = match *layer {
                Layer::Linear { w, b, n_out, relu, .. } => {
                    let z = self.matvec(w, Some(b), &h, n_out);
                    let out = if relu { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
                    cache.pre.push(z);
                    out
                }
                Layer::Residual { w, b, dim, alpha } => {
                    let z = self.matvec(w, b, &h, dim);
                    let out = if alpha == 0.0 {
                        h.clone()
                    } else {
                        h.iter().zip(&z).map(|(x, z)| x + alpha * z.max(0.0)).collect()
                    };
                    cache.pre.push(z);
                    out
                }
            };
            cache.inputs.push(std::mem::replace(&mut h, next));
        }
        (h, cache)
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).0
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    /// Adds this sample's parameter gradients, scaled by `scale`, given `dlogits`.
    fn backward(&mut self, cache: &Cache, dlogits: &[f64], scale: f64) {
        let mut dout = dlogits.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[li];
            let z = &cache.pre[li];
            let (w, b, gate): (usize, Option<usize>, Vec<f64>) = match *layer {
                Layer::Linear { w, b, relu, .. } => {
                    let dz = if relu {
                        dout.iter().zip(z).map(|(d, z)| if *z > 0.0 { *d } else { 0.0 }).collect()
                    } else {
                        dout.clone()
                    };
                    (w, Some(b), dz)
                }
                Layer::Residual { w, b, alpha, .. } => {
                    let dz = dout.iter().zip(z).map(|(d, z)| if *z > 0.0 { alpha * d } else { 0.0 }).collect();
                    (w, b, dz)
                }
            };
            let n_in = x.len();
            if self.params[w].trainable {
                let p = &mut self.params[w];
                for (i, dzi) in gate.iter().enumerate() {
                    if *dzi == 0.0 {
                        continue;
                    }
                    let row = &mut p.grad[i * n_in..(i + 1) * n_in];
                    for (g, xj) in row.iter_mut().zip(x) {
                        *g += scale * dzi * xj;
                    }
                }
                if let Some(mask) = &p.mask {
                    for (g, &on) in p.grad.iter_mut().zip(mask) {
                        if !on {
                            *g = 0.0;
                        }
                    }
                }
            }
            if let Some(b) = b {
                if self.params[b].trainable {
                    for (g, dzi) in self.params[b].grad.iter_mut().zip(&gate) {
                        *g += scale * dzi;
                    }
                }
            }
            if li == 0 {
                break;
            }
            let wv = &self.params[w].value;
            let mut dx = vec![0.0; n_in];
            for (i, dzi) in gate.iter().enumerate() {
                if *dzi == 0.0 {
                    continue;
                }
                for (d, wij) in dx.iter_mut().zip(&wv[i * n_in..(i + 1) * n_in]) {
                    *d += dzi * wij;
                }
            }
            if matches!(layer, Layer::Residual { .. }) {
                for (d, o) in dx.iter_mut().zip(&dout) {
                    *d += o;
                }
            }
            dout = dx;
        }
    }

    fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    fn penalty(&self) -> f64 {
        if self.l2_lambda == 0.0 {
            return 0.0;
        }
        self.l2_lambda
            * self
                .params
                .iter()
                .filter(|p| p.trainable && p.penalized)
                .map(|p| p.value.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
    }

    /// Mean smoothed cross-entropy over the batch plus `lambda * |W|^2`;
    /// gradients are left in the parameters.
    pub fn loss_and_grad(&mut self, xs: &[&[f64]], ys: &[usize]) -> f64 {
        self.zero_grad();
        let n = xs.len() as f64;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (logits, cache) = self.forward(x);
            let (l, dl) = smoothed_xent(&logits, y, self.label_smoothing);
            loss += l / n;
            self.backward(&cache, &dl, 1.0 / n);
        }
        if self.l2_lambda > 0.0 {
            let lam = self.l2_lambda;
            for p in self.params.iter_mut().filter(|p| p.trainable && p.penalized) {
                for (g, v) in p.grad.iter_mut().zip(&p.value) {
                    *g += 2.0 * lam * v;
                }
            }
        }
        loss + self.penalty()
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[usize]) -> f64 {
        let n = xs.len() as f64;
        let data: f64 = xs.iter().zip(ys).map(|(x, &y)| smoothed_xent(&self.logits(x), y, self.label_smoothing).0 / n).sum();
        data + self.penalty()
    }

    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        self.adam_t += 1;
        let t = self.adam_t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for p in self.params.iter_mut().filter(|p| p.trainable) {
            for k in 0..p.value.len() {
                if p.mask.as_ref().is_some_and(|m| !m[k]) {
                    continue;
                }
                let g = p.grad[k];
                p.m[k] = cfg.beta1 * p.m[k] + (1.0 - cfg.beta1) * g;
                p.v[k] = cfg.beta2 * p.v[k] + (1.0 - cfg.beta2) * g * g;
                let mh = p.m[k] / c1;
                let vh = p.v[k] / c2;
                p.value[k] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            }
        }
    }

    /// Whether every entry outside the sparse mask is still exactly zero.
    pub fn mask_intact(&self) -> bool {
        self.params
            .iter()
            .filter_map(|p| p.mask.as_ref().map(|m| (p, m)))
            .all(|(p, m)| p.value.iter().zip(m).all(|(v, &on)| on || *v == 0.0))
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        if ys.is_empty() {
            return 0.0;
        }
        let hits = xs.iter().zip(ys).filter(|(x, &y)| self.predict(x) == y).count();
        hits as f64 / ys.len() as f64
    }

    /// Norm-relative error between analytic and central-difference gradients
    /// over every trainable parameter entry.
    pub fn gradient_check(&mut self, xs: &[&[f64]], ys: &[usize], h: f64) -> f64 {
        self.loss_and_grad(xs, ys);
        let analytic: Vec<f64> = self
            .params
            .iter()
            .flat_map(|p| (0..p.value.len()).filter(|&k| p.active(k)).map(|k| p.grad[k]).collect::<Vec<_>>())
            .collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        for pi in 0..self.params.len() {
            for k in 0..self.params[pi].value.len() {
                if !self.params[pi].active(k) {
                    continue;
                }
                let orig = self.params[pi].value[k];
                self.params[pi].value[k] = orig + h;
                let up = self.loss(xs, ys);
                self.params[pi].value[k] = orig - h;
                let down = self.loss(xs, ys);
                self.params[pi].value[k] = orig;
                numeric.push((up - down) / (2.0 * h));
            }
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        diff / na.max(nn).max(1e-300)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Cross-entropy against `(1 - eps) onehot(y) + eps / C`, and its gradient in the logits.
fn smoothed_xent(logits: &[f64], y: usize, eps: f64) -> (f64, Vec<f64>) {
    let c = logits.len() as f64;
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (k, z) in logits.iter().enumerate() {
        let q = eps / c + if k == y { 1.0 - eps } else { 0.0 };
        let logp = z - lse;
        loss -= q * logp;
        grad.push(logp.exp() - q);
    }
    (loss, grad)
}
