//! A compact trainable transformer encoder (post-layernorm, GELU feed
//! forward, learned token + position embeddings). The pooled output is the
//! final hidden state of the leading classification token.

use ndarray::{s, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{softmax_rows, softmax_rows_backward, Linear, ParamSet, Tensor1, Tensor2};

const INIT_STD: f64 = 0.02;
const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransformerConfig {
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff: usize,
    pub vocab: usize,
    pub max_len: usize,
}

#[derive(Debug, Clone)]
struct LayerNorm {
    gamma: Tensor1,
    beta: Tensor1,
}

#[derive(Debug, Clone)]
struct LayerNormCache {
    xhat: Array2<f64>,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    fn new(dim: usize) -> Self {
        LayerNorm {
            gamma: Tensor1::ones(dim),
            beta: Tensor1::zeros(dim),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LayerNormCache) {
        let d = x.ncols() as f64;
        let mut xhat = Array2::zeros(x.raw_dim());
        let mut out = Array2::zeros(x.raw_dim());
        let mut inv_std = Vec::with_capacity(x.nrows());
        for (i, row) in x.rows().into_iter().enumerate() {
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let istd = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(istd);
            for (j, &v) in row.iter().enumerate() {
                let xh = (v - mean) * istd;
                xhat[[i, j]] = xh;
                out[[i, j]] = self.gamma.v[j] * xh + self.beta.v[j];
            }
        }
        (out, LayerNormCache { xhat, inv_std })
    }

    fn backward(&mut self, cache: &LayerNormCache, dy: &Array2<f64>) -> Array2<f64> {
        let d = dy.ncols() as f64;
        let mut dx = Array2::zeros(dy.raw_dim());
        for i in 0..dy.nrows() {
            let mut mean_dxhat = 0.0;
            let mut mean_dxhat_xhat = 0.0;
            for j in 0..dy.ncols() {
                let dyij = dy[[i, j]];
                self.gamma.g[j] += dyij * cache.xhat[[i, j]];
                self.beta.g[j] += dyij;
                let dxhat = dyij * self.gamma.v[j];
                mean_dxhat += dxhat;
                mean_dxhat_xhat += dxhat * cache.xhat[[i, j]];
            }
            mean_dxhat /= d;
            mean_dxhat_xhat /= d;
            for j in 0..dy.ncols() {
                let dxhat = dy[[i, j]] * self.gamma.v[j];
                dx[[i, j]] = cache.inv_std[i]
                    * (dxhat - mean_dxhat - cache.xhat[[i, j]] * mean_dxhat_xhat);
            }
        }
        dx
    }
}

fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let u = C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * 0.044715 * x * x)
}

#[derive(Debug, Clone)]
struct EncoderLayer {
    wq: Linear,
    wk: Linear,
    wv: Linear,
    wo: Linear,
    ln1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    ln2: LayerNorm,
    heads: usize,
}

#[derive(Debug, Clone)]
struct LayerCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    mixed: Array2<f64>,
    ln1: LayerNormCache,
    ln1_out: Array2<f64>,
    ff1_out: Array2<f64>,
    gelu_out: Array2<f64>,
    ln2: LayerNormCache,
}

impl EncoderLayer {
    fn new(hidden: usize, heads: usize, ff: usize, rng: &mut ChaCha20Rng) -> Self {
        EncoderLayer {
            wq: Linear::new(hidden, hidden, INIT_STD, rng),
            wk: Linear::new(hidden, hidden, INIT_STD, rng),
            wv: Linear::new(hidden, hidden, INIT_STD, rng),
            wo: Linear::new(hidden, hidden, INIT_STD, rng),
            ln1: LayerNorm::new(hidden),
            ff1: Linear::new(hidden, ff, INIT_STD, rng),
            ff2: Linear::new(ff, hidden, INIT_STD, rng),
            ln2: LayerNorm::new(hidden),
            heads: heads,
        }
    }

    fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LayerCache) {
        let n = x.nrows();
        let d = x.ncols();
        let dh = d / self.heads;
        let q = self.wq.forward_rows(x);
        let k = self.wk.forward_rows(x);
        let v = self.wv.forward_rows(x);
        let mut mixed = Array2::zeros((n, d));
        let mut attn = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let scores = qh.dot(&kh.t()) / (dh as f64).sqrt();
            let a = softmax_rows(&scores);
            mixed.slice_mut(cols).assign(&a.dot(&vh));
            attn.push(a);
        }
        let attn_out = self.wo.forward_rows(&mixed);
        let (ln1_out, ln1) = self.ln1.forward(&(x + &attn_out));
        let ff1_out = self.ff1.forward_rows(&ln1_out);
        let gelu_out = ff1_out.mapv(gelu);
        let ff2_out = self.ff2.forward_rows(&gelu_out);
        let ln2_in = &ln1_out + &ff2_out;
        let (out, ln2) = self.ln2.forward(&ln2_in);
        let cache = LayerCache {
            x: x.clone(),
            q,
            k,
            v,
            attn,
            mixed,
            ln1,
            ln1_out,
            ff1_out,
            gelu_out,
            ln2,
        };
        (out, cache)
    }

    fn backward(&mut self, cache: &LayerCache, dout: &Array2<f64>) -> Array2<f64> {
        let d = cache.x.ncols();
        let dh = d / self.heads;
        let dln2_in = self.ln2.backward(&cache.ln2, dout);
        // ln2_in = ln1_out + ff2(gelu(ff1(ln1_out)))
        let dff2_out = dln2_in.clone();
        let dgelu_out = self.ff2.backward_rows(&cache.gelu_out, &dff2_out);
        let dff1_out = &dgelu_out * &cache.ff1_out.mapv(gelu_grad);
        let dln1_out_ffn = self.ff1.backward_rows(&cache.ln1_out, &dff1_out);
        let dln1_out = &dln2_in + &dln1_out_ffn;
        let dln1_in = self.ln1.backward(&cache.ln1, &dln1_out);
        // ln1_in = x + wo(mixed)
        let dattn_out = dln1_in.clone();
        let dmixed = self.wo.backward_rows(&cache.mixed, &dattn_out);
        let mut dq = Array2::zeros(cache.q.raw_dim());
        let mut dk = Array2::zeros(cache.k.raw_dim());
        let mut dv = Array2::zeros(cache.v.raw_dim());
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let a = &cache.attn[h];
            let dmix_h = dmixed.slice(cols).to_owned();
            let vh = cache.v.slice(cols).to_owned();
            let qh = cache.q.slice(cols).to_owned();
            let kh = cache.k.slice(cols).to_owned();
            let da = dmix_h.dot(&vh.t());
            dv.slice_mut(cols).assign(&a.t().dot(&dmix_h));
            let dscores = softmax_rows_backward(a, &da);
            let scale = 1.0 / (dh as f64).sqrt();
            dq.slice_mut(cols).assign(&(dscores.dot(&kh) * scale));
            dk.slice_mut(cols).assign(&(dscores.t().dot(&qh) * scale));
        }
        let mut dx = dln1_in; // residual path
        dx += &self.wq.backward_rows(&cache.x, &dq);
        dx += &self.wk.backward_rows(&cache.x, &dk);
        dx += &self.wv.backward_rows(&cache.x, &dv);
        dx
    }
}

impl ParamSet for EncoderLayer {
    fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        self.wq.visit(f);
        self.wk.visit(f);
        self.wv.visit(f);
        self.wo.visit(f);
        self.ln1.gamma.visit(f);
        self.ln1.beta.visit(f);
        self.ff1.visit(f);
        self.ff2.visit(f);
        self.ln2.gamma.visit(f);
        self.ln2.beta.visit(f);
    }
}

#[derive(Debug, Clone)]
pub struct TransformerEncoder {
    pub cfg: TransformerConfig,
    tok_emb: Tensor2,
    pos_emb: Tensor2,
    layers: Vec<EncoderLayer>,
}

#[derive(Debug, Clone)]
pub struct TransformerCache {
    ids: Vec<usize>,
    layer_caches: Vec<LayerCache>,
}

impl TransformerEncoder {
    pub fn new(cfg: TransformerConfig, seed: u64) -> Self {
        assert!(cfg.hidden % cfg.heads == 0, "hidden must divide into heads");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let tok_emb = Tensor2::randn(cfg.vocab, cfg.hidden, INIT_STD, &mut rng);
        let pos_emb = Tensor2::randn(cfg.max_len, cfg.hidden, INIT_STD, &mut rng);
        let layers = (0..cfg.layers)
            .map(|_| EncoderLayer::new(cfg.hidden, cfg.heads, cfg.ff, &mut rng))
            .collect();
        TransformerEncoder {
            cfg,
            tok_emb,
            pos_emb,
            layers,
        }
    }

    /// Encodes a token-id sequence and returns the leading token's final
    /// hidden state.
    pub fn forward(&self, ids: &[usize]) -> (Array1<f64>, TransformerCache) {
        assert!(!ids.is_empty(), "empty input sequence");
        let n = ids.len().min(self.cfg.max_len);
        let ids = &ids[..n];
        let mut x = Array2::zeros((n, self.cfg.hidden));
        for (i, &id) in ids.iter().enumerate() {
            let row = &self.tok_emb.v.row(id.min(self.cfg.vocab - 1))
                + &self.pos_emb.v.row(i);
            x.row_mut(i).assign(&row);
        }
        let mut layer_caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = layer.forward(&x);
            layer_caches.push(cache);
            x = next;
        }
        let pooled = x.row(0).to_owned();
        (
            pooled,
            TransformerCache {
                ids: ids.to_vec(),
                layer_caches,
            },
        )
    }

    /// Backpropagates from the pooled output into all parameters.
    pub fn backward(&mut self, cache: &TransformerCache, dpooled: &Array1<f64>) {
        let n = cache.ids.len();
        let mut dx = Array2::zeros((n, self.cfg.hidden));
        dx.row_mut(0).assign(dpooled);
        for (layer, lcache) in self.layers.iter_mut().zip(cache.layer_caches.iter()).rev() {
            dx = layer.backward(lcache, &dx);
        }
        for (i, &id) in cache.ids.iter().enumerate() {
            let id = id.min(self.cfg.vocab - 1);
            let grad_row = dx.row(i);
            let mut tok_row = self.tok_emb.g.row_mut(id);
            tok_row += &grad_row;
            let mut pos_row = self.pos_emb.g.row_mut(i);
            pos_row += &grad_row;
        }
    }

    pub fn pooled_dim(&self) -> usize {
        self.cfg.hidden
    }
}

impl ParamSet for TransformerEncoder {
    fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        self.tok_emb.visit(f);
        self.pos_emb.visit(f);
        for layer in &mut self.layers {
            layer.visit(f);
        }
    }
}
