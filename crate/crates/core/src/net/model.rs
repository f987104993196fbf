use std::borrow::Borrow;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layout::{BlockOffsets, Layout};
use super::ops::{gelu, gelu_grad, layer_norm, layer_norm_backward, linear, linear_backward, softmax, NormCache};
use super::{ModelConfig, Sequence};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;

/// Examples per gradient chunk. Chunk sums are reduced in chunk order so the
/// result does not depend on the execution policy.
const CHUNK: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub input: Sequence,
    pub label: usize,
}

impl Example {
    pub fn new(input: Sequence, label: usize) -> Example {
        Example { input, label }
    }
}

/// Classifier parameters, stored as one flat vector described by a [`Layout`].
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    layout: Layout,
    params: Vec<f64>,
}

struct BlockCache {
    ln1: NormCache,
    h1: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Attention weights, `[head][query][key]`.
    att: Vec<f64>,
    ctx: Vec<f64>,
    ln2: NormCache,
    h2: Vec<f64>,
    u: Vec<f64>,
    a: Vec<f64>,
}

struct Cache {
    blocks: Vec<BlockCache>,
    lnf: NormCache,
    pooled: Vec<f64>,
    probs: Vec<f64>,
}

impl Model {
    /// Weights are drawn from N(0, init_scale²), divided by √fan_in for the
    /// projection matrices. Biases start at zero and norm gains at one.
    pub fn init(config: ModelConfig) -> Result<Model> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total()];
        let mut r = rng::substream(config.seed, 0);
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let d = config.embed_dim;
        let fill = |params: &mut [f64], offset: usize, len: usize, std: f64, r: &mut rng::Rng| {
            for p in &mut params[offset..offset + len] {
                *p = std * std_normal.sample(r);
            }
        };
        let s = config.init_scale;
        let sd = s / (d as f64).sqrt();
        let sf = s / (config.ff_dim as f64).sqrt();
        fill(&mut params, layout.tok, config.vocab_size * d, s, &mut r);
        fill(&mut params, layout.pos, config.max_len * d, s, &mut r);
        for b in &layout.blocks {
            for w in [b.wq, b.wk, b.wv, b.wo] {
                fill(&mut params, w, d * d, sd, &mut r);
            }
            if config.tie_qk_init {
                params.copy_within(b.wq..b.wq + d * d, b.wk);
            }
            fill(&mut params, b.w1, d * config.ff_dim, sd, &mut r);
            fill(&mut params, b.w2, config.ff_dim * d, sf, &mut r);
            params[b.ln1_g..b.ln1_g + d].fill(1.0);
            params[b.ln2_g..b.ln2_g + d].fill(1.0);
        }
        params[layout.lnf_g..layout.lnf_g + d].fill(1.0);
        fill(&mut params, layout.head_w, d * config.n_classes, sd, &mut r);
        Ok(Model { config, layout, params })
    }

    pub fn from_parts(config: ModelConfig, params: Vec<f64>) -> Result<Model> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total() {
            return Err(Error::BadConfig(format!(
                "expected {} parameters, got {}",
                layout.total(),
                params.len()
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::BadConfig(format!("parameter {i} is not finite")));
        }
        Ok(Model { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Class probabilities for one input.
    pub fn forward(&self, seq: &Sequence) -> Result<Vec<f64>> {
        seq.check(&self.config)?;
        Ok(self.run(seq).probs)
    }

    pub fn predict(&self, seq: &Sequence) -> Result<usize> {
        let p = self.forward(seq)?;
        Ok(argmax(&p))
    }

    /// Mean negative log-likelihood over the batch.
    pub fn loss<E: Borrow<Example> + Sync>(&self, batch: &[E]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for e in batch {
            let e = e.borrow();
            self.check_example(e)?;
            total += nll(&self.run(&e.input).probs, e.label);
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean loss and its analytic gradient with respect to every parameter.
    pub fn loss_and_grads<E: Borrow<Example> + Sync>(&self, batch: &[E], exec: Exec) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for e in batch {
            self.check_example(e.borrow())?;
        }
        let n_chunks = batch.len().div_ceil(CHUNK);
        let parts = exec.map(n_chunks, |c| {
            let mut grads = vec![0.0; self.params.len()];
            let mut loss = 0.0;
            for e in &batch[c * CHUNK..((c + 1) * CHUNK).min(batch.len())] {
                let e = e.borrow();
                let cache = self.run(&e.input);
                loss += nll(&cache.probs, e.label);
                self.backward(&e.input, e.label, &cache, &mut grads);
            }
            (loss, grads)
        });
        let scale = 1.0 / batch.len() as f64;
        let mut iter = parts.into_iter();
        let (mut loss, mut grads) = iter.next().expect("non-empty batch");
        for (l, g) in iter {
            loss += l;
            for (a, b) in grads.iter_mut().zip(&g) {
                *a += b;
            }
        }
        for g in &mut grads {
            *g *= scale;
        }
        Ok((loss * scale, grads))
    }

    fn check_example(&self, e: &Example) -> Result<()> {
        e.input.check(&self.config)?;
        if e.label >= self.config.n_classes {
            return Err(Error::BadConfig(format!(
                "label {} out of range for {} classes",
                e.label, self.config.n_classes
            )));
        }
        Ok(())
    }

    fn run(&self, seq: &Sequence) -> Cache {
        let c = &self.config;
        let d = c.embed_dim;
        let l = seq.len();
        let p = &self.params;
        let mut x = vec![0.0; l * d];
        for (t, xr) in x.chunks_exact_mut(d).enumerate() {
            xr.copy_from_slice(&p[self.layout.pos + t * d..self.layout.pos + (t + 1) * d]);
            for &f in seq.position(t) {
                let row = &p[self.layout.tok + f as usize * d..self.layout.tok + (f as usize + 1) * d];
                for (a, b) in xr.iter_mut().zip(row) {
                    *a += b;
                }
            }
        }
        let mut blocks = Vec::with_capacity(c.n_blocks);
        for b in &self.layout.blocks {
            let (bc, out) = self.block_forward(b, seq, &x);
            blocks.push(bc);
            x = out;
        }
        let (xf, lnf) = layer_norm(&x, d, &p[self.layout.lnf_g..][..d], &p[self.layout.lnf_b..][..d]);
        let mut pooled = vec![0.0; d];
        let n_live = seq.live_count() as f64;
        for (t, xr) in xf.chunks_exact(d).enumerate() {
            if seq.is_live(t) {
                for (a, b) in pooled.iter_mut().zip(xr) {
                    *a += b / n_live;
                }
            }
        }
        let k = c.n_classes;
        let logits = linear(&pooled, 1, d, &p[self.layout.head_w..][..d * k], Some(&p[self.layout.head_b..][..k]), k);
        Cache {
            blocks,
            lnf,
            pooled,
            probs: softmax(&logits),
        }
    }

    fn block_forward(&self, b: &BlockOffsets, seq: &Sequence, x: &[f64]) -> (BlockCache, Vec<f64>) {
        let c = &self.config;
        let (d, ff, l) = (c.embed_dim, c.ff_dim, seq.len());
        let p = &self.params;
        let (h1, ln1) = layer_norm(x, d, &p[b.ln1_g..][..d], &p[b.ln1_b..][..d]);
        let q = linear(&h1, l, d, &p[b.wq..][..d * d], None, d);
        let k = linear(&h1, l, d, &p[b.wk..][..d * d], None, d);
        let v = linear(&h1, l, d, &p[b.wv..][..d * d], None, d);
        let (att, ctx) = attention(&q, &k, &v, seq, c.n_heads, d);
        let o = linear(&ctx, l, d, &p[b.wo..][..d * d], Some(&p[b.bo..][..d]), d);
        let x_mid: Vec<f64> = x.iter().zip(&o).map(|(a, b)| a + b).collect();
        let (h2, ln2) = layer_norm(&x_mid, d, &p[b.ln2_g..][..d], &p[b.ln2_b..][..d]);
        let u = linear(&h2, l, d, &p[b.w1..][..d * ff], Some(&p[b.b1..][..ff]), ff);
        let a: Vec<f64> = u.iter().map(|&v| gelu(v)).collect();
        let f = linear(&a, l, ff, &p[b.w2..][..ff * d], Some(&p[b.b2..][..d]), d);
        let out: Vec<f64> = x_mid.iter().zip(&f).map(|(a, b)| a + b).collect();
        (
            BlockCache {
                ln1,
                h1,
                q,
                k,
                v,
                att,
                ctx,
                ln2,
                h2,
                u,
                a,
            },
            out,
        )
    }

    /// Adds the gradient of this example's NLL to `grads`.
    fn backward(&self, seq: &Sequence, label: usize, cache: &Cache, grads: &mut [f64]) {
        let c = &self.config;
        let (d, k, l) = (c.embed_dim, c.n_classes, seq.len());
        let lay = &self.layout;
        let p = &self.params;

        let mut dlogits = cache.probs.clone();
        dlogits[label] -= 1.0;
        let dpooled = {
            let (dw, db) = split_weight_bias(grads, lay.head_w, d * k, lay.head_b, k);
            linear_backward(&cache.pooled, d, &p[lay.head_w..][..d * k], k, &dlogits, dw, Some(db))
        };
        let n_live = seq.live_count() as f64;
        let mut dxf = vec![0.0; l * d];
        for (t, row) in dxf.chunks_exact_mut(d).enumerate() {
            if seq.is_live(t) {
                for (a, b) in row.iter_mut().zip(&dpooled) {
                    *a = b / n_live;
                }
            }
        }
        let mut dx = {
            let (dg, db) = split_pair(grads, lay.lnf_g, lay.lnf_b, d);
            layer_norm_backward(&cache.lnf, d, &p[lay.lnf_g..][..d], &dxf, dg, db)
        };
        for (b, bc) in lay.blocks.iter().zip(&cache.blocks).rev() {
            dx = self.block_backward(b, bc, seq, dx, grads);
        }
        for t in 0..l {
            let dr = &dx[t * d..(t + 1) * d];
            for (a, g) in grads[lay.pos + t * d..][..d].iter_mut().zip(dr) {
                *a += g;
            }
            for &f in seq.position(t) {
                for (a, g) in grads[lay.tok + f as usize * d..][..d].iter_mut().zip(dr) {
                    *a += g;
                }
            }
        }
    }

    fn block_backward(&self, b: &BlockOffsets, bc: &BlockCache, seq: &Sequence, dout: Vec<f64>, grads: &mut [f64]) -> Vec<f64> {
        let c = &self.config;
        let (d, ff) = (c.embed_dim, c.ff_dim);
        let p = &self.params;

        // feed-forward branch
        let da = {
            let (dw2, db2) = split_weight_bias(grads, b.w2, ff * d, b.b2, d);
            linear_backward(&bc.a, ff, &p[b.w2..][..ff * d], d, &dout, dw2, Some(db2))
        };
        let du: Vec<f64> = da.iter().zip(&bc.u).map(|(g, &u)| g * gelu_grad(u)).collect();
        let dh2 = {
            let (dw1, db1) = split_weight_bias(grads, b.w1, d * ff, b.b1, ff);
            linear_backward(&bc.h2, d, &p[b.w1..][..d * ff], ff, &du, dw1, Some(db1))
        };
        let dn2 = {
            let (dg, db) = split_pair(grads, b.ln2_g, b.ln2_b, d);
            layer_norm_backward(&bc.ln2, d, &p[b.ln2_g..][..d], &dh2, dg, db)
        };
        let dmid: Vec<f64> = dout.iter().zip(&dn2).map(|(a, b)| a + b).collect();

        // attention branch
        let dctx = {
            let (dwo, dbo) = split_weight_bias(grads, b.wo, d * d, b.bo, d);
            linear_backward(&bc.ctx, d, &p[b.wo..][..d * d], d, &dmid, dwo, Some(dbo))
        };
        let (dq, dk, dv) = attention_backward(bc, seq, c.n_heads, d, &dctx);
        let mut dh1 = linear_backward(&bc.h1, d, &p[b.wq..][..d * d], d, &dq, &mut grads[b.wq..][..d * d], None);
        for (w, dy) in [(b.wk, &dk), (b.wv, &dv)] {
            let part = linear_backward(&bc.h1, d, &p[w..][..d * d], d, dy, &mut grads[w..][..d * d], None);
            for (a, g) in dh1.iter_mut().zip(&part) {
                *a += g;
            }
        }
        let dn1 = {
            let (dg, db) = split_pair(grads, b.ln1_g, b.ln1_b, d);
            layer_norm_backward(&bc.ln1, d, &p[b.ln1_g..][..d], &dh1, dg, db)
        };
        dmid.iter().zip(&dn1).map(|(a, b)| a + b).collect()
    }
}

/// Scaled dot-product attention over live keys. Returns the weights and the
/// concatenated per-head context vectors.
fn attention(q: &[f64], k: &[f64], v: &[f64], seq: &Sequence, heads: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
    let l = seq.len();
    let hd = d / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut att = vec![0.0; heads * l * l];
    let mut ctx = vec![0.0; l * d];
    let mut scores = vec![0.0; l];
    for h in 0..heads {
        let off = h * hd;
        for i in 0..l {
            let qi = &q[i * d + off..][..hd];
            let mut m = f64::NEG_INFINITY;
            for j in 0..l {
                if seq.is_live(j) {
                    let kj = &k[j * d + off..][..hd];
                    let s = scale * qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>();
                    scores[j] = s;
                    m = m.max(s);
                }
            }
            let row = &mut att[(h * l + i) * l..][..l];
            let mut z = 0.0;
            for j in 0..l {
                if seq.is_live(j) {
                    row[j] = (scores[j] - m).exp();
                    z += row[j];
                }
            }
            let ci = &mut ctx[i * d + off..][..hd];
            for j in 0..l {
                if seq.is_live(j) {
                    row[j] /= z;
                    let w = row[j];
                    for (c, vv) in ci.iter_mut().zip(&v[j * d + off..][..hd]) {
                        *c += w * vv;
                    }
                }
            }
        }
    }
    (att, ctx)
}

fn attention_backward(bc: &BlockCache, seq: &Sequence, heads: usize, d: usize, dctx: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let l = seq.len();
    let hd = d / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut dq = vec![0.0; l * d];
    let mut dk = vec![0.0; l * d];
    let mut dv = vec![0.0; l * d];
    let mut ds = vec![0.0; l];
    for h in 0..heads {
        let off = h * hd;
        for i in 0..l {
            let row = &bc.att[(h * l + i) * l..][..l];
            let dci = &dctx[i * d + off..][..hd];
            let mut dot = 0.0;
            for j in 0..l {
                if seq.is_live(j) {
                    let dp: f64 = dci.iter().zip(&bc.v[j * d + off..][..hd]).map(|(a, b)| a * b).sum();
                    ds[j] = dp;
                    dot += row[j] * dp;
                    for (g, c) in dv[j * d + off..][..hd].iter_mut().zip(dci) {
                        *g += row[j] * c;
                    }
                }
            }
            for j in 0..l {
                if seq.is_live(j) {
                    let s = scale * row[j] * (ds[j] - dot);
                    for t in 0..hd {
                        dq[i * d + off + t] += s * bc.k[j * d + off + t];
                        dk[j * d + off + t] += s * bc.q[i * d + off + t];
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}

/// Disjoint mutable views of two equally sized tensors with `a < b`.
fn split_pair(grads: &mut [f64], a: usize, b: usize, len: usize) -> (&mut [f64], &mut [f64]) {
    let (lo, hi) = grads.split_at_mut(b);
    (&mut lo[a..a + len], &mut hi[..len])
}

fn split_weight_bias(grads: &mut [f64], w: usize, wlen: usize, b: usize, blen: usize) -> (&mut [f64], &mut [f64]) {
    let (lo, hi) = grads.split_at_mut(b);
    (&mut lo[w..w + wlen], &mut hi[..blen])
}

fn nll(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(f64::MIN_POSITIVE).ln()
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}
