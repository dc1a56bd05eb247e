//! Image-fusion network.
//!
//! Every selected representation goes through one shared encoder
//! (conv 3×3 → SiLU → 2×2 average pool, twice, then global average), giving
//! a feature vector `f_r`. Scores `s_r = u·f_r + e_r` are softmax-normalised
//! into attention weights `α`, the weighted features `α_r f_r` are
//! concatenated, and a two-layer MLP with a softmax head classifies them.
//!
//! All parameters live in one flat vector so that optimisation, checksums,
//! serialisation and finite-difference checks see the same layout.

use std::ops::Range;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::{ImageTensor, Representation, CHANNELS};
use crate::matrix::Matrix;
use crate::seed;

use super::classifier::softmax_in_place;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionArch {
    pub representations: Vec<Representation>,
    pub n_classes: usize,
    pub image_size: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
    /// Side of the grid the last feature map is average-pooled to; 1 is a
    /// global mean.
    pub pool_grid: usize,
    /// Bypass the convolutions and the hidden layer: features are 4×4
    /// average-pooled pixels and the head is a single affine map.
    pub linear_only: bool,
    /// Per-representation RGB masks; a `false` channel is read as zero.
    pub channel_masks: Vec<[bool; 3]>,
}

impl FusionArch {
    pub fn new(representations: &[Representation], n_classes: usize, image_size: usize) -> Self {
        FusionArch {
            representations: representations.to_vec(),
            n_classes,
            image_size,
            conv1: 8,
            conv2: 16,
            hidden: 32,
            pool_grid: 4,
            linear_only: false,
            channel_masks: vec![[true; 3]; representations.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.representations.len();
        if r == 0 || r > 4 {
            return Err(Error::contract(format!("fusion needs 1 to 4 representations, got {r}")));
        }
        for (i, a) in self.representations.iter().enumerate() {
            if self.representations[..i].contains(a) {
                return Err(Error::contract(format!("representation {} listed twice", a.name())));
            }
        }
        if self.channel_masks.len() != r {
            return Err(Error::contract("one channel mask per representation"));
        }
        if self.n_classes < 2 {
            return Err(Error::contract("fusion needs at least two classes"));
        }
        if self.image_size < 4 || self.image_size % 4 != 0 {
            return Err(Error::contract(format!(
                "image size {} must be a positive multiple of 4",
                self.image_size
            )));
        }
        if !self.linear_only && (self.conv1 == 0 || self.conv2 == 0 || self.hidden == 0) {
            return Err(Error::contract("layer widths must be positive"));
        }
        if !self.linear_only && (self.pool_grid == 0 || (self.image_size / 2) % self.pool_grid != 0) {
            return Err(Error::contract(format!(
                "pool grid {} does not divide the {}-pixel feature map",
                self.pool_grid,
                self.image_size / 2
            )));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        if self.linear_only {
            CHANNELS * (self.image_size / 4).pow(2)
        } else {
            self.conv2 * self.pool_grid * self.pool_grid
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub conv1_w: Range<usize>,
    pub conv1_b: Range<usize>,
    pub conv2_w: Range<usize>,
    pub conv2_b: Range<usize>,
    pub att_u: Range<usize>,
    pub att_e: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn of(a: &FusionArch) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let (c1, c2) = if a.linear_only { (0, 0) } else { (a.conv1, a.conv2) };
        let f = a.feature_dim();
        let r = a.representations.len();
        let h = if a.linear_only { 0 } else { a.hidden };
        let head_in = if a.linear_only { r * f } else { h };
        let conv1_w = take(r * c1 * CHANNELS * 9);
        let conv1_b = take(r * c1);
        let conv2_w = take(r * c2 * c1 * 9);
        let conv2_b = take(r * c2);
        let att_u = take(f);
        let att_e = take(r);
        let w1 = take(h * r * f);
        let b1 = take(h);
        let w2 = take(a.n_classes * head_in);
        let b2 = take(a.n_classes);
        Layout {
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            att_u,
            att_e,
            w1,
            b1,
            w2,
            b2,
            total: at,
        }
    }

    /// Convolution ranges of the encoder for representation `r`; each
    /// representation has its own encoder.
    pub fn encoder(&self, r: usize, n_reps: usize) -> [Range<usize>; 4] {
        let part = |range: &Range<usize>| {
            let len = range.len() / n_reps.max(1);
            range.start + r * len..range.start + (r + 1) * len
        };
        [part(&self.conv1_w), part(&self.conv1_b), part(&self.conv2_w), part(&self.conv2_b)]
    }

    /// Weight tensors (decayed), as opposed to biases and attention offsets.
    fn weight_ranges(&self) -> [Range<usize>; 5] {
        [
            self.conv1_w.clone(),
            self.conv2_w.clone(),
            self.att_u.clone(),
            self.w1.clone(),
            self.w2.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionHyper {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub label_smoothing: f64,
    /// Heavy-ball momentum; 0 is plain gradient descent.
    pub momentum: f64,
}

impl Default for FusionHyper {
    fn default() -> Self {
        FusionHyper {
            epochs: 100,
            batch: 64,
            lr: 0.001,
            weight_decay: 5e-5,
            label_smoothing: 0.1,
            momentum: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub epoch_loss: Vec<f64>,
    pub validation_top1: Vec<f64>,
    pub wall_clock_s: f64,
    pub checksum: String,
}

/// Images per representation (outer index follows the architecture's
/// representation order) and class indices per window.
#[derive(Debug, Clone, Copy)]
pub struct FusionData<'a> {
    pub images: &'a [Vec<ImageTensor>],
    pub labels: &'a [usize],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionNet {
    pub arch: FusionArch,
    pub seed: u64,
    pub params: Vec<f64>,
    layout: Layout,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// 3×3 convolution with zero padding 1 over `cin × n × n` input.
fn conv_forward(input: &[f64], cin: usize, n: usize, w: &[f64], b: &[f64], active: &[bool]) -> Vec<f64> {
    let cout = b.len();
    let mut out = vec![0.0; cout * n * n];
    for co in 0..cout {
        let o = &mut out[co * n * n..(co + 1) * n * n];
        o.fill(b[co]);
        for ci in (0..cin).filter(|&c| active[c]) {
            let inp = &input[ci * n * n..(ci + 1) * n * n];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = w[((co * cin + ci) * 3 + ky) * 3 + kx];
                    let (y0, y1) = (1usize.saturating_sub(ky), (n + 1 - ky).min(n));
                    let (x0, x1) = (1usize.saturating_sub(kx), (n + 1 - kx).min(n));
                    for y in y0..y1 {
                        let src = &inp[(y + ky - 1) * n + x0 + kx - 1..(y + ky - 1) * n + x1 + kx - 1];
                        let dst = &mut o[y * n + x0..y * n + x1];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    cin: usize,
    n: usize,
    w: &[f64],
    dout: &[f64],
    cout: usize,
    active: &[bool],
    dw: &mut [f64],
    db: &mut [f64],
    mut dinput: Option<&mut [f64]>,
) {
    for co in 0..cout {
        let d = &dout[co * n * n..(co + 1) * n * n];
        db[co] += d.iter().sum::<f64>();
        for ci in (0..cin).filter(|&c| active[c]) {
            let inp = &input[ci * n * n..(ci + 1) * n * n];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wi = ((co * cin + ci) * 3 + ky) * 3 + kx;
                    let (y0, y1) = (1usize.saturating_sub(ky), (n + 1 - ky).min(n));
                    let (x0, x1) = (1usize.saturating_sub(kx), (n + 1 - kx).min(n));
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let src = (y + ky - 1) * n + x0 + kx - 1;
                        let row = &d[y * n + x0..y * n + x1];
                        acc += row.iter().zip(&inp[src..src + (x1 - x0)]).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(di) = dinput.as_deref_mut() {
                            let wv = w[wi];
                            let dst = &mut di[ci * n * n + src..ci * n * n + src + (x1 - x0)];
                            for (t, g) in dst.iter_mut().zip(row) {
                                *t += wv * g;
                            }
                        }
                    }
                    dw[wi] += acc;
                }
            }
        }
    }
}

/// Non-overlapping `k × k` mean pool over `c × n × n`.
fn avg_pool(input: &[f64], c: usize, n: usize, k: usize) -> Vec<f64> {
    let m = n / k;
    let mut out = vec![0.0; c * m * m];
    let s = 1.0 / (k * k) as f64;
    for ch in 0..c {
        for y in 0..n {
            for x in 0..n {
                out[(ch * m + y / k) * m + x / k] += input[(ch * n + y) * n + x] * s;
            }
        }
    }
    out
}

fn avg_pool_backward(dout: &[f64], c: usize, n: usize, k: usize) -> Vec<f64> {
    let m = n / k;
    let s = 1.0 / (k * k) as f64;
    let mut din = vec![0.0; c * n * n];
    for ch in 0..c {
        for y in 0..n {
            for x in 0..n {
                din[(ch * n + y) * n + x] = dout[(ch * m + y / k) * m + x / k] * s;
            }
        }
    }
    din
}

/// Zero mean and unit variance per channel; constant channels become zero.
fn standardize_channels(img: &[f64], n: usize) -> Vec<f64> {
    let nn = (n * n) as f64;
    img.chunks(n * n)
        .flat_map(|c| {
            let mean = c.iter().sum::<f64>() / nn;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nn;
            let scale = if var > 1e-12 { 1.0 / var.sqrt() } else { 0.0 };
            c.iter().map(move |v| (v - mean) * scale)
        })
        .collect()
}

struct EncCache {
    x: Vec<f64>,
    a1: Vec<f64>,
    p1: Vec<f64>,
    a2: Vec<f64>,
    f: Vec<f64>,
}

struct HeadCache {
    alpha: Vec<f64>,
    z: Vec<f64>,
    a3: Vec<f64>,
    h3: Vec<f64>,
    p: Vec<f64>,
}

pub fn smoothed_target(label: usize, k: usize, eps: f64) -> Vec<f64> {
    let mut q = vec![eps / k as f64; k];
    q[label] += 1.0 - eps;
    q
}

/// Smallest achievable smoothed cross-entropy: the entropy of the target.
pub fn smoothed_entropy_floor(k: usize, eps: f64) -> f64 {
    smoothed_target(0, k, eps)
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| -q * q.ln())
        .sum()
}

pub fn cross_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&pi, &qi)| if qi > 0.0 { -qi * pi.max(1e-300).ln() } else { 0.0 }).sum()
}

fn matvec(w: &[f64], x: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(i, &bi)| bi + w[i * n..(i + 1) * n].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

impl FusionNet {
    pub fn with_arch(arch: FusionArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::of(&arch);
        let mut params = vec![0.0; layout.total];
        let mut rng = seed::rng(seed);
        let r = arch.representations.len();
        let f = arch.feature_dim();
        let fan = [
            (layout.conv1_w.clone(), CHANNELS * 9),
            (layout.conv2_w.clone(), arch.conv1 * 9),
            (layout.att_u.clone(), f),
            (layout.w1.clone(), r * f),
            (
                layout.w2.clone(),
                if arch.linear_only { r * f } else { arch.hidden },
            ),
        ];
        for (range, fan_in) in fan {
            let bound = (3.0 / fan_in.max(1) as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.random_range(-bound..bound);
            }
        }
        for range in [layout.conv1_b.clone(), layout.conv2_b.clone(), layout.b1.clone()] {
            params[range].fill(0.01);
        }
        Ok(FusionNet {
            arch,
            seed,
            params,
            layout,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    /// SHA-256 over the little-endian parameter bytes.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            h.update(p.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    fn encode(&self, params: &[f64], rep: usize, img: &[f64], mask: &[bool; 3]) -> EncCache {
        let a = &self.arch;
        let n = a.image_size;
        if a.linear_only {
            let masked: Vec<f64> = img
                .chunks(n * n)
                .zip(mask)
                .flat_map(|(c, &on)| c.iter().map(move |&v| if on { v } else { 0.0 }))
                .collect();
            let f = avg_pool(&masked, CHANNELS, n, 4);
            return EncCache {
                x: Vec::new(),
                a1: Vec::new(),
                p1: Vec::new(),
                a2: Vec::new(),
                f,
            };
        }
        let [w1, b1, w2, b2] = self.layout.encoder(rep, a.representations.len());
        let x = standardize_channels(img, n);
        let a1 = conv_forward(&x, CHANNELS, n, &params[w1], &params[b1], mask);
        let h1: Vec<f64> = a1.iter().map(|&v| silu(v)).collect();
        let p1 = avg_pool(&h1, a.conv1, n, 2);
        let m = n / 2;
        let all = vec![true; a.conv1];
        let a2 = conv_forward(&p1, a.conv1, m, &params[w2], &params[b2], &all);
        let h2: Vec<f64> = a2.iter().map(|&v| silu(v)).collect();
        let f = avg_pool(&h2, a.conv2, m, m / a.pool_grid);
        EncCache { x, a1, p1, a2, f }
    }

    #[allow(clippy::too_many_arguments)]
    fn encode_backward(&self, params: &[f64], rep: usize, mask: &[bool; 3], c: &EncCache, df: &[f64], grad: &mut [f64]) {
        let a = &self.arch;
        if a.linear_only {
            return;
        }
        let [w1, b1, w2, b2] = self.layout.encoder(rep, a.representations.len());
        let n = a.image_size;
        let m = n / 2;
        // grid pooling of silu(a2), which also absorbs the second 2×2 pool
        let dh2 = avg_pool_backward(df, a.conv2, m, m / a.pool_grid);
        let da2: Vec<f64> = dh2.iter().zip(&c.a2).map(|(g, &v)| g * silu_grad(v)).collect();
        let mut dp1 = vec![0.0; a.conv1 * m * m];
        {
            let (lo, hi) = grad.split_at_mut(b2.start);
            let dw = &mut lo[w2.clone()];
            let db = &mut hi[..b2.len()];
            let all = vec![true; a.conv1];
            conv_backward(&c.p1, a.conv1, m, &params[w2.clone()], &da2, a.conv2, &all, dw, db, Some(&mut dp1));
        }
        let dh1 = avg_pool_backward(&dp1, a.conv1, n, 2);
        let da1: Vec<f64> = dh1.iter().zip(&c.a1).map(|(g, &v)| g * silu_grad(v)).collect();
        let (lo, hi) = grad.split_at_mut(b1.start);
        let dw = &mut lo[w1.clone()];
        let db = &mut hi[..b1.len()];
        conv_backward(&c.x, CHANNELS, n, &params[w1.clone()], &da1, a.conv1, mask, dw, db, None);
    }

    fn head(&self, params: &[f64], feats: &[Vec<f64>]) -> HeadCache {
        let l = &self.layout;
        let u = &params[l.att_u.clone()];
        let e = &params[l.att_e.clone()];
        let mut alpha: Vec<f64> = feats
            .iter()
            .zip(e)
            .map(|(f, &er)| er + f.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        softmax_in_place(&mut alpha);
        let z: Vec<f64> = feats
            .iter()
            .zip(&alpha)
            .flat_map(|(f, &al)| f.iter().map(move |v| al * v))
            .collect();
        let (a3, h3) = if self.arch.linear_only {
            (Vec::new(), z.clone())
        } else {
            let a3 = matvec(&params[l.w1.clone()], &z, &params[l.b1.clone()]);
            let h3 = a3.iter().map(|&v| silu(v)).collect();
            (a3, h3)
        };
        let mut p = matvec(&params[l.w2.clone()], &h3, &params[l.b2.clone()]);
        softmax_in_place(&mut p);
        HeadCache { alpha, z, a3, h3, p }
    }

    fn sample_inputs<'a>(&self, images: &'a [Vec<ImageTensor>], i: usize) -> Vec<&'a [f64]> {
        images.iter().map(|rep| rep[i].pixels()).collect()
    }

    fn forward_with(&self, params: &[f64], inputs: &[&[f64]]) -> (Vec<EncCache>, HeadCache) {
        let enc: Vec<EncCache> = inputs
            .iter()
            .zip(&self.arch.channel_masks)
            .enumerate()
            .map(|(r, (img, m))| self.encode(params, r, img, m))
            .collect();
        let feats: Vec<Vec<f64>> = enc.iter().map(|c| c.f.clone()).collect();
        let head = self.head(params, &feats);
        (enc, head)
    }

    /// Class probabilities for one window, one flat image per representation.
    pub fn forward(&self, inputs: &[&[f64]]) -> Vec<f64> {
        self.forward_with(&self.params, inputs).1.p
    }

    pub fn attention(&self, inputs: &[&[f64]]) -> Vec<f64> {
        self.forward_with(&self.params, inputs).1.alpha
    }

    /// Loss of one sample and its gradient added into `grad`.
    fn sample_grad(&self, params: &[f64], inputs: &[&[f64]], label: usize, smoothing: f64, grad: &mut [f64]) -> f64 {
        let a = &self.arch;
        let l = &self.layout;
        let (enc, hc) = self.forward_with(params, inputs);
        let k = a.n_classes;
        let q = smoothed_target(label, k, smoothing);
        let loss = cross_entropy(&hc.p, &q);
        let dlogit: Vec<f64> = hc.p.iter().zip(&q).map(|(p, q)| p - q).collect();

        let hn = hc.h3.len();
        let w2 = &params[l.w2.clone()];
        let mut dh3 = vec![0.0; hn];
        for (c, &g) in dlogit.iter().enumerate() {
            grad[l.b2.start + c] += g;
            let row = l.w2.start + c * hn;
            for j in 0..hn {
                grad[row + j] += g * hc.h3[j];
                dh3[j] += g * w2[c * hn + j];
            }
        }
        let dz = if a.linear_only {
            dh3
        } else {
            let zn = hc.z.len();
            let w1 = &params[l.w1.clone()];
            let mut dz = vec![0.0; zn];
            for (i, (&g, &pre)) in dh3.iter().zip(&hc.a3).enumerate() {
                let da = g * silu_grad(pre);
                grad[l.b1.start + i] += da;
                let row = l.w1.start + i * zn;
                for j in 0..zn {
                    grad[row + j] += da * hc.z[j];
                    dz[j] += da * w1[i * zn + j];
                }
            }
            dz
        };

        let f = a.feature_dim();
        let u = &params[l.att_u.clone()];
        let dalpha: Vec<f64> = enc
            .iter()
            .enumerate()
            .map(|(r, c)| dz[r * f..(r + 1) * f].iter().zip(&c.f).map(|(a, b)| a * b).sum())
            .collect();
        let mean: f64 = hc.alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
        for (r, c) in enc.iter().enumerate() {
            let ds = hc.alpha[r] * (dalpha[r] - mean);
            grad[l.att_e.start + r] += ds;
            let mut df = vec![0.0; f];
            for j in 0..f {
                grad[l.att_u.start + j] += ds * c.f[j];
                df[j] = hc.alpha[r] * dz[r * f + j] + ds * u[j];
            }
            self.encode_backward(params, r, &a.channel_masks[r], c, &df, grad);
        }
        loss
    }

    /// Mean loss and gradient over `idx`. Per-sample gradients are computed
    /// in parallel and summed in index order, so the result does not depend
    /// on the thread count.
    pub fn loss_and_grad(&self, data: &FusionData<'_>, idx: &[usize], smoothing: f64) -> (f64, Vec<f64>) {
        self.loss_and_grad_at(&self.params, data, idx, smoothing)
    }

    fn loss_and_grad_at(&self, params: &[f64], data: &FusionData<'_>, idx: &[usize], smoothing: f64) -> (f64, Vec<f64>) {
        let parts: Vec<(f64, Vec<f64>)> = idx
            .par_iter()
            .map(|&i| {
                let mut g = vec![0.0; params.len()];
                let inputs = self.sample_inputs(data.images, i);
                let loss = self.sample_grad(params, &inputs, data.labels[i], smoothing, &mut g);
                (loss, g)
            })
            .collect();
        let n = idx.len().max(1) as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for (l, g) in parts {
            loss += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        grad.iter_mut().for_each(|v| *v /= n);
        (loss / n, grad)
    }

    pub fn loss(&self, data: &FusionData<'_>, idx: &[usize], smoothing: f64) -> f64 {
        self.loss_at(&self.params, data, idx, smoothing)
    }

    fn loss_at(&self, params: &[f64], data: &FusionData<'_>, idx: &[usize], smoothing: f64) -> f64 {
        let k = self.arch.n_classes;
        let total: f64 = idx
            .par_iter()
            .map(|&i| {
                let inputs = self.sample_inputs(data.images, i);
                let p = self.forward_with(params, &inputs).1.p;
                cross_entropy(&p, &smoothed_target(data.labels[i], k, smoothing))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        total / idx.len().max(1) as f64
    }

    /// Probability rows for every window in `images`.
    pub fn predict_proba(&self, images: &[Vec<ImageTensor>]) -> Result<Matrix> {
        let n = check_images(&self.arch, images)?;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| self.forward(&self.sample_inputs(images, i)))
            .collect();
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, self.arch.n_classes));
        }
        Matrix::from_rows(&rows)
    }
}

pub fn build_fusion_net(
    representations: &[Representation],
    n_classes: usize,
    image_size: usize,
    seed: u64,
) -> Result<FusionNet> {
    FusionNet::with_arch(FusionArch::new(representations, n_classes, image_size), seed)
}

/// Shapes agree with the architecture and windows line up across
/// representations. Returns the window count.
fn check_images(arch: &FusionArch, images: &[Vec<ImageTensor>]) -> Result<usize> {
    if images.len() != arch.representations.len() {
        return Err(Error::contract(format!(
            "{} image sets for {} representations",
            images.len(),
            arch.representations.len()
        )));
    }
    let n = images[0].len();
    for (r, set) in images.iter().enumerate() {
        if set.len() != n {
            return Err(Error::contract(format!(
                "representation {} has {} windows, expected {n}; first mismatched window is {}",
                arch.representations[r].name(),
                set.len(),
                set.len().min(n)
            )));
        }
        for (i, img) in set.iter().enumerate() {
            if img.height() != arch.image_size || img.width() != arch.image_size {
                return Err(Error::contract(format!(
                    "window {i}: {}×{} image, expected {}",
                    img.height(),
                    img.width(),
                    arch.image_size
                )));
            }
            if img.source_window != images[0][i].source_window {
                return Err(Error::contract(format!(
                    "window {i} is misaligned between {} and {}",
                    arch.representations[0].name(),
                    arch.representations[r].name()
                )));
            }
        }
    }
    Ok(n)
}

fn check_data(arch: &FusionArch, data: &FusionData<'_>) -> Result<usize> {
    let n = check_images(arch, data.images)?;
    if data.labels.len() != n {
        return Err(Error::contract(format!("{} labels for {n} windows", data.labels.len())));
    }
    if let Some(l) = data.labels.iter().find(|&&l| l >= arch.n_classes) {
        return Err(Error::contract(format!("label {l} outside {} classes", arch.n_classes)));
    }
    Ok(n)
}

fn top1(net: &FusionNet, data: &FusionData<'_>) -> Result<f64> {
    let p = net.predict_proba(data.images)?;
    let hits = p
        .iter_rows()
        .zip(data.labels)
        .filter(|(r, &l)| {
            let best = (0..r.len()).max_by(|&a, &b| r[a].total_cmp(&r[b]).then(b.cmp(&a))).unwrap_or(0);
            best == l
        })
        .count();
    Ok(hits as f64 / data.labels.len().max(1) as f64)
}

/// Mini-batch gradient descent with decoupled weight decay on `net`.
/// Batch order per epoch is drawn from `derive(seed, epoch)`.
pub fn train_fusion(
    net: &mut FusionNet,
    train: &FusionData<'_>,
    validation: Option<&FusionData<'_>>,
    hyper: &FusionHyper,
    seed: u64,
) -> Result<TrainReport> {
    let n = check_data(&net.arch, train)?;
    if n == 0 {
        return Err(Error::contract("no training windows"));
    }
    if let Some(v) = validation {
        check_data(&net.arch, v)?;
    }
    if !(0.0..1.0).contains(&hyper.label_smoothing) || hyper.batch == 0 || !(hyper.lr >= 0.0) {
        return Err(Error::contract("invalid fusion hyperparameters"));
    }
    let clock = Instant::now();
    let all: Vec<usize> = (0..n).collect();
    let initial_loss = net.loss(train, &all, hyper.label_smoothing);
    let decayed = net.layout.weight_ranges();
    let mut velocity = vec![0.0; net.params.len()];
    let mut epoch_loss = Vec::with_capacity(hyper.epochs);
    let mut validation_top1 = Vec::new();
    for epoch in 0..hyper.epochs {
        let mut order = all.clone();
        order.shuffle(&mut seed::rng(seed::derive(seed, epoch as u64)));
        let mut sum = 0.0;
        for batch in order.chunks(hyper.batch) {
            let (loss, grad) = net.loss_and_grad(train, batch, hyper.label_smoothing);
            sum += loss * batch.len() as f64;
            for range in &decayed {
                for p in &mut net.params[range.clone()] {
                    *p *= 1.0 - hyper.lr * hyper.weight_decay;
                }
            }
            for ((p, v), g) in net.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = hyper.momentum * *v + g;
                *p -= hyper.lr * *v;
            }
        }
        let mean = sum / n as f64;
        if !mean.is_finite() {
            return Err(Error::contract(format!("training diverged at epoch {epoch}")));
        }
        epoch_loss.push(mean);
        if let Some(v) = validation {
            validation_top1.push(top1(net, v)?);
        }
    }
    Ok(TrainReport {
        initial_loss,
        epoch_loss,
        validation_top1,
        wall_clock_s: clock.elapsed().as_secs_f64(),
        checksum: net.checksum(),
    })
}

/// Gradients smaller than this in both routes are not compared.
pub const GRADIENT_SKIP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
    /// (parameter index, analytic, numeric) at the largest error.
    pub worst: Option<(usize, f64, f64)>,
}

/// Fourth-order central differences with step `epsilon` on a seeded subset
/// of at least 200 parameters (all of them if fewer) against
/// backpropagation. Relative error is
/// `|analytic − numeric| / max(|analytic|, |numeric|)`.
pub fn gradient_check_report(net: &FusionNet, batch: &FusionData<'_>, epsilon: f64, seed: u64) -> Result<GradientCheck> {
    let n = check_data(&net.arch, batch)?;
    if n == 0 {
        return Err(Error::contract("gradient check needs a non-empty batch"));
    }
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(Error::contract(format!("epsilon {epsilon} outside [1e-6, 1e-3]")));
    }
    let idx: Vec<usize> = (0..n).collect();
    let smoothing = 0.1;
    let (_, analytic) = net.loss_and_grad(batch, &idx, smoothing);
    let total = net.params.len();
    let picks: Vec<usize> = if total <= 256 {
        (0..total).collect()
    } else {
        let mut rng = seed::rng(seed);
        let mut v = rand::seq::index::sample(&mut rng, total, 256).into_vec();
        v.sort_unstable();
        v
    };
    let mut report = GradientCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
        worst: None,
    };
    let mut params = net.params.clone();
    for &j in &picks {
        let orig = params[j];
        let mut at = |h: f64| {
            params[j] = orig + h;
            net.loss_at(&params, batch, &idx, smoothing)
        };
        let (p1, m1, p2, m2) = (at(epsilon), at(-epsilon), at(2.0 * epsilon), at(-2.0 * epsilon));
        params[j] = orig;
        let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * epsilon);
        let a = analytic[j];
        let scale = a.abs().max(numeric.abs());
        if scale < GRADIENT_SKIP {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let rel = (a - numeric).abs() / scale;
        if rel > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(rel);
            report.worst = Some((j, a, numeric));
        }
    }
    Ok(report)
}

pub fn gradient_check(net: &FusionNet, batch: &FusionData<'_>, epsilon: f64, seed: u64) -> Result<f64> {
    Ok(gradient_check_report(net, batch, epsilon, seed)?.max_rel_error)
}
