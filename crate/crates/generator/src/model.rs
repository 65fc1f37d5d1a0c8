//! Decoder-only multi-head attention model with hand-written backpropagation.
//!
//! Each layer is pre-normalized: `x += Attn(LN(x))`, then `x += FFN(LN(x))`.
//! Heads slice the query, key and value projections into `heads` blocks of
//! `d_model / heads` columns; their outputs are concatenated and mixed by the
//! output projection. Positions use a fixed sinusoidal table, and the model
//! also carries the learned scalar `log Z` of the training objective.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{dot, gelu, gelu_grad, log_softmax, softmax, Mat};

pub const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("sequence of {len} positions exceeds the context of {context}")]
    Overlong { len: usize, context: usize },
    #[error("token id {id} is outside the vocabulary of {vocab}")]
    UnknownToken { id: u32, vocab: usize },
    #[error("empty input sequence")]
    Empty,
    #[error("invalid model configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub d_ff: usize,
    /// Maximum number of input positions, BOS included.
    pub context: usize,
}

impl ModelConfig {
    /// Default desk-scale shape.
    pub fn desk(vocab_size: usize) -> ModelConfig {
        ModelConfig { vocab_size, d_model: 128, heads: 8, layers: 4, d_ff: 512, context: 128 }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.vocab_size == 0 || self.d_model == 0 || self.heads == 0 || self.d_ff == 0 || self.context == 0 {
            return err("every dimension must be positive");
        }
        if self.d_model % self.heads != 0 {
            return err("d_model must be divisible by heads");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub ln1_g: Mat,
    pub ln1_b: Mat,
    pub wq: Mat,
    pub wk: Mat,
    pub wv: Mat,
    pub wo: Mat,
    pub bo: Mat,
    pub ln2_g: Mat,
    pub ln2_b: Mat,
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
}

impl Layer {
    fn zeros(d: usize, f: usize) -> Layer {
        Layer {
            ln1_g: Mat::zeros(1, d),
            ln1_b: Mat::zeros(1, d),
            wq: Mat::zeros(d, d),
            wk: Mat::zeros(d, d),
            wv: Mat::zeros(d, d),
            wo: Mat::zeros(d, d),
            bo: Mat::zeros(1, d),
            ln2_g: Mat::zeros(1, d),
            ln2_b: Mat::zeros(1, d),
            w1: Mat::zeros(d, f),
            b1: Mat::zeros(1, f),
            w2: Mat::zeros(f, d),
            b2: Mat::zeros(1, d),
        }
    }

    fn tensors(&self) -> [(&'static str, &Mat); 13] {
        [
            ("ln1_g", &self.ln1_g),
            ("ln1_b", &self.ln1_b),
            ("wq", &self.wq),
            ("wk", &self.wk),
            ("wv", &self.wv),
            ("wo", &self.wo),
            ("bo", &self.bo),
            ("ln2_g", &self.ln2_g),
            ("ln2_b", &self.ln2_b),
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }

    fn tensors_mut(&mut self) -> [(&'static str, &mut Mat); 13] {
        let Layer { ln1_g, ln1_b, wq, wk, wv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2 } = self;
        [
            ("ln1_g", ln1_g),
            ("ln1_b", ln1_b),
            ("wq", wq),
            ("wk", wk),
            ("wv", wv),
            ("wo", wo),
            ("bo", bo),
            ("ln2_g", ln2_g),
            ("ln2_b", ln2_b),
            ("w1", w1),
            ("b1", b1),
            ("w2", w2),
            ("b2", b2),
        ]
    }
}

/// Every trainable tensor of the model. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub embed: Mat,
    pub layers: Vec<Layer>,
    pub lnf_g: Mat,
    pub lnf_b: Mat,
    pub w_out: Mat,
    pub b_out: Mat,
    pub log_z: Mat,
}

impl Params {
    pub fn zeros(cfg: &ModelConfig) -> Params {
        let (v, d) = (cfg.vocab_size, cfg.d_model);
        Params {
            embed: Mat::zeros(v, d),
            layers: (0..cfg.layers).map(|_| Layer::zeros(d, cfg.d_ff)).collect(),
            lnf_g: Mat::zeros(1, d),
            lnf_b: Mat::zeros(1, d),
            w_out: Mat::zeros(d, v),
            b_out: Mat::zeros(1, v),
            log_z: Mat::zeros(1, 1),
        }
    }

    /// Scaled Gaussian initialization; residual projections are shrunk by the depth.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Params {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, d, f) = (cfg.vocab_size, cfg.d_model, cfg.d_ff);
        let sd = 1.0 / (d as f64).sqrt();
        let depth = 1.0 / (2.0 * cfg.layers.max(1) as f64).sqrt();
        let mut p = Params::zeros(cfg);
        p.embed = Mat::randn(v, d, 1.0, &mut rng);
        for l in &mut p.layers {
            l.ln1_g = Mat::filled(1, d, 1.0);
            l.ln2_g = Mat::filled(1, d, 1.0);
            l.wq = Mat::randn(d, d, sd, &mut rng);
            l.wk = Mat::randn(d, d, sd, &mut rng);
            l.wv = Mat::randn(d, d, sd, &mut rng);
            l.wo = Mat::randn(d, d, sd * depth, &mut rng);
            l.w1 = Mat::randn(d, f, sd, &mut rng);
            l.w2 = Mat::randn(f, d, depth / (f as f64).sqrt(), &mut rng);
        }
        p.lnf_g = Mat::filled(1, d, 1.0);
        p.w_out = Mat::randn(d, v, sd, &mut rng);
        p
    }

    pub fn tensors(&self) -> Vec<(String, &Mat)> {
        let mut out = vec![("embed".to_string(), &self.embed)];
        for (i, l) in self.layers.iter().enumerate() {
            out.extend(l.tensors().into_iter().map(|(n, m)| (format!("layer{i}.{n}"), m)));
        }
        out.push(("lnf_g".into(), &self.lnf_g));
        out.push(("lnf_b".into(), &self.lnf_b));
        out.push(("w_out".into(), &self.w_out));
        out.push(("b_out".into(), &self.b_out));
        out.push(("log_z".into(), &self.log_z));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
        let Params { embed, layers, lnf_g, lnf_b, w_out, b_out, log_z } = self;
        let mut out = vec![("embed".to_string(), embed)];
        for (i, l) in layers.iter_mut().enumerate() {
            out.extend(l.tensors_mut().into_iter().map(|(n, m)| (format!("layer{i}.{n}"), m)));
        }
        out.push(("lnf_g".into(), lnf_g));
        out.push(("lnf_b".into(), lnf_b));
        out.push(("w_out".into(), w_out));
        out.push(("b_out".into(), b_out));
        out.push(("log_z".into(), log_z));
        out
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Params) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }
}

/// Sinusoidal position table: even columns sine, odd columns cosine.
pub fn position_table(context: usize, d: usize) -> Mat {
    let mut pe = Mat::zeros(context, d);
    for p in 0..context {
        for i in 0..d {
            let freq = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let a = p as f64 * freq;
            *pe.at_mut(p, i) = if i % 2 == 0 { a.sin() } else { a.cos() };
        }
    }
    pe
}

struct LnCache {
    xhat: Mat,
    inv_std: Vec<f64>,
}

fn ln_forward(x: &Mat, g: &Mat, b: &Mat) -> (Mat, LnCache) {
    let mut y = x.zeros_like();
    let mut xhat = x.zeros_like();
    let mut inv_std = Vec::with_capacity(x.rows);
    let n = x.cols as f64;
    for r in 0..x.rows {
        let row = x.row(r);
        let mu = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        let is = 1.0 / (var + LN_EPS).sqrt();
        inv_std.push(is);
        for c in 0..x.cols {
            let h = (row[c] - mu) * is;
            *xhat.at_mut(r, c) = h;
            *y.at_mut(r, c) = g.data[c] * h + b.data[c];
        }
    }
    (y, LnCache { xhat, inv_std })
}

fn ln_backward(dy: &Mat, g: &Mat, cache: &LnCache, dg: &mut Mat, db: &mut Mat) -> Mat {
    let n = dy.cols as f64;
    let mut dx = dy.zeros_like();
    for r in 0..dy.rows {
        let (dyr, xh) = (dy.row(r), cache.xhat.row(r));
        let mut dxhat = vec![0.0; dy.cols];
        for c in 0..dy.cols {
            dg.data[c] += dyr[c] * xh[c];
            db.data[c] += dyr[c];
            dxhat[c] = dyr[c] * g.data[c];
        }
        let mean = dxhat.iter().sum::<f64>() / n;
        let mean_x = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n;
        for c in 0..dy.cols {
            *dx.at_mut(r, c) = cache.inv_std[r] * (dxhat[c] - mean - xh[c] * mean_x);
        }
    }
    dx
}

struct LayerCache {
    ln1: LnCache,
    a: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Attention weights per head, `T x T`, zero above the diagonal.
    probs: Vec<Mat>,
    h: Mat,
    ln2: LnCache,
    c: Mat,
    u: Mat,
    r: Mat,
}

/// Activations kept from a forward pass for backpropagation.
pub struct Cache {
    tokens: Vec<u32>,
    layers: Vec<LayerCache>,
    lnf: LnCache,
    z: Mat,
    /// Next-token log-probabilities, `T x V`.
    pub logp: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub params: Params,
    pe: Mat,
}

/// Per-layer keys and values of the positions decoded so far.
#[derive(Debug, Clone)]
pub struct KvCache {
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    len: usize,
}

impl KvCache {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl Model {
    pub fn new(cfg: ModelConfig, params: Params) -> Result<Model, ModelError> {
        cfg.validate()?;
        let expect = Params::zeros(&cfg);
        let shapes_match = params.layers.len() == expect.layers.len()
            && params.tensors().iter().zip(expect.tensors()).all(|((_, a), (_, b))| (a.rows, a.cols) == (b.rows, b.cols));
        if !shapes_match {
            return Err(ModelError::Config("parameter shapes do not match the configuration".into()));
        }
        let pe = position_table(cfg.context, cfg.d_model);
        Ok(Model { cfg, params, pe })
    }

    pub fn init(cfg: ModelConfig, seed: u64) -> Result<Model, ModelError> {
        cfg.validate()?;
        let params = Params::init(&cfg, seed);
        Model::new(cfg, params)
    }

    pub fn log_z(&self) -> f64 {
        self.params.log_z.data[0]
    }

    fn check(&self, tokens: &[u32]) -> Result<(), ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::Empty);
        }
        if tokens.len() > self.cfg.context {
            return Err(ModelError::Overlong { len: tokens.len(), context: self.cfg.context });
        }
        if let Some(&id) = tokens.iter().find(|&&t| t as usize >= self.cfg.vocab_size) {
            return Err(ModelError::UnknownToken { id, vocab: self.cfg.vocab_size });
        }
        Ok(())
    }

    /// Next-token log-probabilities at every position, `T x V`.
    pub fn forward(&self, tokens: &[u32]) -> Result<Mat, ModelError> {
        Ok(self.forward_cached(tokens)?.logp)
    }

    /// Unnormalized next-token scores at every position, `T x V`.
    pub fn logits(&self, tokens: &[u32]) -> Result<Mat, ModelError> {
        let cache = self.forward_cached(tokens)?;
        let mut out = cache.z.matmul(&self.params.w_out);
        out.add_row(&self.params.b_out);
        Ok(out)
    }

    pub fn forward_cached(&self, tokens: &[u32]) -> Result<Cache, ModelError> {
        self.check(tokens)?;
        let (t_len, d) = (tokens.len(), self.cfg.d_model);
        let (heads, dh) = (self.cfg.heads, self.cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        let p = &self.params;

        let mut x = Mat::zeros(t_len, d);
        for (t, &tok) in tokens.iter().enumerate() {
            for (o, (e, pe)) in x.row_mut(t).iter_mut().zip(p.embed.row(tok as usize).iter().zip(self.pe.row(t))) {
                *o = e + pe;
            }
        }

        let mut layers = Vec::with_capacity(p.layers.len());
        for l in &p.layers {
            let (a, ln1) = ln_forward(&x, &l.ln1_g, &l.ln1_b);
            let (q, k, v) = (a.matmul(&l.wq), a.matmul(&l.wk), a.matmul(&l.wv));
            let mut h = Mat::zeros(t_len, d);
            let mut probs = Vec::with_capacity(heads);
            for hd in 0..heads {
                let cols = hd * dh..(hd + 1) * dh;
                let mut pm = Mat::zeros(t_len, t_len);
                for t in 0..t_len {
                    let qt = &q.row(t)[cols.clone()];
                    let row = &mut pm.row_mut(t)[..=t];
                    for (u, s) in row.iter_mut().enumerate() {
                        *s = dot(qt, &k.row(u)[cols.clone()]) * scale;
                    }
                    softmax(row);
                    let ht = &mut h.row_mut(t)[cols.clone()];
                    for (u, &w) in pm.row(t)[..=t].iter().enumerate() {
                        for (o, &vv) in ht.iter_mut().zip(&v.row(u)[cols.clone()]) {
                            *o += w * vv;
                        }
                    }
                }
                probs.push(pm);
            }
            let mut o = h.matmul(&l.wo);
            o.add_row(&l.bo);
            x.add_assign(&o);

            let (c, ln2) = ln_forward(&x, &l.ln2_g, &l.ln2_b);
            let mut u = c.matmul(&l.w1);
            u.add_row(&l.b1);
            let r = Mat { rows: u.rows, cols: u.cols, data: u.data.iter().map(|&z| gelu(z)).collect() };
            let mut f = r.matmul(&l.w2);
            f.add_row(&l.b2);
            x.add_assign(&f);
            layers.push(LayerCache { ln1, a, q, k, v, probs, h, ln2, c, u, r });
        }

        let (z, lnf) = ln_forward(&x, &p.lnf_g, &p.lnf_b);
        let mut logp = z.matmul(&p.w_out);
        logp.add_row(&p.b_out);
        for t in 0..t_len {
            log_softmax(logp.row_mut(t));
        }
        Ok(Cache { tokens: tokens.to_vec(), layers, lnf, z, logp })
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to the output logits is `dlogits`.
    pub fn backward(&self, cache: &Cache, dlogits: &Mat, grads: &mut Params) {
        let p = &self.params;
        let dh = self.cfg.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let t_len = cache.tokens.len();

        grads.w_out.add_tmatmul(&cache.z, dlogits);
        grads.b_out.add_col_sums(dlogits);
        let dz = dlogits.matmul_t(&p.w_out);
        let mut dx = ln_backward(&dz, &p.lnf_g, &cache.lnf, &mut grads.lnf_g, &mut grads.lnf_b);

        for ((l, lc), g) in p.layers.iter().zip(&cache.layers).zip(grads.layers.iter_mut()).rev() {
            // Feed-forward block.
            g.w2.add_tmatmul(&lc.r, &dx);
            g.b2.add_col_sums(&dx);
            let mut du = dx.matmul_t(&l.w2);
            for (d, &u) in du.data.iter_mut().zip(&lc.u.data) {
                *d *= gelu_grad(u);
            }
            g.w1.add_tmatmul(&lc.c, &du);
            g.b1.add_col_sums(&du);
            let dc = du.matmul_t(&l.w1);
            dx.add_assign(&ln_backward(&dc, &l.ln2_g, &lc.ln2, &mut g.ln2_g, &mut g.ln2_b));

            // Attention block.
            g.wo.add_tmatmul(&lc.h, &dx);
            g.bo.add_col_sums(&dx);
            let dh_all = dx.matmul_t(&l.wo);
            let (mut dq, mut dk, mut dv) = (dx.zeros_like(), dx.zeros_like(), dx.zeros_like());
            for (hd, pm) in lc.probs.iter().enumerate() {
                let cols = hd * dh..(hd + 1) * dh;
                for t in 0..t_len {
                    let dht = &dh_all.row(t)[cols.clone()];
                    let pr = &pm.row(t)[..=t];
                    let dp: Vec<f64> = (0..=t).map(|u| dot(dht, &lc.v.row(u)[cols.clone()])).collect();
                    let inner: f64 = pr.iter().zip(&dp).map(|(a, b)| a * b).sum();
                    for u in 0..=t {
                        for (o, &x) in dv.row_mut(u)[cols.clone()].iter_mut().zip(dht) {
                            *o += pr[u] * x;
                        }
                        let ds = pr[u] * (dp[u] - inner) * scale;
                        if ds == 0.0 {
                            continue;
                        }
                        for (o, &kv) in dq.row_mut(t)[cols.clone()].iter_mut().zip(&lc.k.row(u)[cols.clone()]) {
                            *o += ds * kv;
                        }
                        for (o, &qv) in dk.row_mut(u)[cols.clone()].iter_mut().zip(&lc.q.row(t)[cols.clone()]) {
                            *o += ds * qv;
                        }
                    }
                }
            }
            g.wq.add_tmatmul(&lc.a, &dq);
            g.wk.add_tmatmul(&lc.a, &dk);
            g.wv.add_tmatmul(&lc.a, &dv);
            let mut da = dq.matmul_t(&l.wq);
            da.add_assign(&dk.matmul_t(&l.wk));
            da.add_assign(&dv.matmul_t(&l.wv));
            dx.add_assign(&ln_backward(&da, &l.ln1_g, &lc.ln1, &mut g.ln1_g, &mut g.ln1_b));
        }

        for (t, &tok) in cache.tokens.iter().enumerate() {
            for (o, &v) in grads.embed.row_mut(tok as usize).iter_mut().zip(dx.row(t)) {
                *o += v;
            }
        }
    }

    pub fn new_cache(&self) -> KvCache {
        let n = self.cfg.layers;
        KvCache { keys: vec![Vec::new(); n], values: vec![Vec::new(); n], len: 0 }
    }

    /// Feeds one token at the next position and returns the logits for the
    /// position after it.
    pub fn step(&self, cache: &mut KvCache, token: u32) -> Result<Vec<f64>, ModelError> {
        if cache.len >= self.cfg.context {
            return Err(ModelError::Overlong { len: cache.len + 1, context: self.cfg.context });
        }
        if token as usize >= self.cfg.vocab_size {
            return Err(ModelError::UnknownToken { id: token, vocab: self.cfg.vocab_size });
        }
        let (d, heads, dh) = (self.cfg.d_model, self.cfg.heads, self.cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        let pos = cache.len;
        let p = &self.params;
        let mut x = Mat::from_vec(
            1,
            d,
            p.embed.row(token as usize).iter().zip(self.pe.row(pos)).map(|(e, pe)| e + pe).collect(),
        );
        for (li, l) in p.layers.iter().enumerate() {
            let (a, _) = ln_forward(&x, &l.ln1_g, &l.ln1_b);
            let q = a.matmul(&l.wq);
            cache.keys[li].extend_from_slice(&a.matmul(&l.wk).data);
            cache.values[li].extend_from_slice(&a.matmul(&l.wv).data);
            let (keys, values) = (&cache.keys[li], &cache.values[li]);
            let mut h = Mat::zeros(1, d);
            for hd in 0..heads {
                let cols = hd * dh..(hd + 1) * dh;
                let mut w: Vec<f64> =
                    (0..=pos).map(|u| dot(&q.data[cols.clone()], &keys[u * d..(u + 1) * d][cols.clone()]) * scale).collect();
                softmax(&mut w);
                for (u, &wu) in w.iter().enumerate() {
                    for (o, &vv) in h.data[cols.clone()].iter_mut().zip(&values[u * d..(u + 1) * d][cols.clone()]) {
                        *o += wu * vv;
                    }
                }
            }
            let mut o = h.matmul(&l.wo);
            o.add_row(&l.bo);
            x.add_assign(&o);
            let (c, _) = ln_forward(&x, &l.ln2_g, &l.ln2_b);
            let mut u = c.matmul(&l.w1);
            u.add_row(&l.b1);
            u.data.iter_mut().for_each(|z| *z = gelu(*z));
            let mut f = u.matmul(&l.w2);
            f.add_row(&l.b2);
            x.add_assign(&f);
        }
        cache.len += 1;
        let (z, _) = ln_forward(&x, &p.lnf_g, &p.lnf_b);
        let mut logits = z.matmul(&p.w_out);
        logits.add_row(&p.b_out);
        Ok(logits.data)
    }
}

/// Input ids (`BOS` + sequence) and next-token targets (sequence + `EOS`).
pub fn shift(seq: &[u32], bos: u32, eos: u32) -> (Vec<u32>, Vec<u32>) {
    let mut input = Vec::with_capacity(seq.len() + 1);
    input.push(bos);
    input.extend_from_slice(seq);
    let mut target = seq.to_vec();
    target.push(eos);
    (input, target)
}

/// Log-probability of a whole sequence under teacher forcing.
pub fn sequence_log_prob(logp: &Mat, targets: &[u32]) -> f64 {
    targets.iter().enumerate().map(|(t, &y)| logp.at(t, y as usize)).sum()
}

/// `dlogits` for a loss `coef * log P(targets)`.
pub fn sequence_dlogits(logp: &Mat, targets: &[u32], coef: f64) -> Mat {
    let mut d = logp.zeros_like();
    for (t, &y) in targets.iter().enumerate() {
        for (o, &lp) in d.row_mut(t).iter_mut().zip(logp.row(t)) {
            *o = -coef * lp.exp();
        }
        *d.at_mut(t, y as usize) += coef;
    }
    d
}
