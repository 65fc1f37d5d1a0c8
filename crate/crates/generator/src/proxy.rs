//! Learned reward estimator standing in for simulator rollouts.
//!
//! Every position contributes `gelu(U[t_i] + C[t_{i-1}] + b)`, a feature of
//! the token and its predecessor. Features are summed, passed through one
//! hidden layer and a softplus head, and rescaled by the mean training label.

use lawgen_core::scenario::BOS;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adam::{clip_global_norm, Adam, AdamConfig};
use crate::tensor::{gelu, gelu_grad, sigmoid, softplus, Mat};

/// Divisor applied to the pooled feature sum.
const POOL_SCALE: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProxyError {
    #[error("proxy training set is empty")]
    Empty,
    #[error("reward {reward} of example {index} is negative or not finite")]
    BadReward { index: usize, reward: f64 },
    #[error("token id {id} is outside the vocabulary of {vocab}")]
    UnknownToken { id: u32, vocab: usize },
    #[error("invalid proxy configuration: {0}")]
    Config(String),
    #[error("proxy training diverged at epoch {epoch}")]
    NonFinite { epoch: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxyConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// L2 penalty on every weight.
    pub weight_decay: f64,
    /// Standard deviation of the initial token and context features.
    pub init_std: f64,
    /// Share of examples held out for the error estimate.
    pub holdout: f64,
    pub seed: u64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig { hidden: 32, epochs: 150, batch_size: 32, learning_rate: 1e-2, weight_decay: 1e-4, init_std: 0.05, holdout: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyParams {
    pub token: Mat,
    pub context: Mat,
    pub b_a: Mat,
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
}

impl ProxyParams {
    fn zeros(vocab: usize, h: usize) -> ProxyParams {
        ProxyParams {
            token: Mat::zeros(vocab, h),
            context: Mat::zeros(vocab, h),
            b_a: Mat::zeros(1, h),
            w1: Mat::zeros(h, h),
            b1: Mat::zeros(1, h),
            w2: Mat::zeros(h, 1),
            b2: Mat::zeros(1, 1),
        }
    }

    fn tensors(&self) -> Vec<&Mat> {
        vec![&self.token, &self.context, &self.b_a, &self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Mat> {
        let ProxyParams { token, context, b_a, w1, b1, w2, b2 } = self;
        vec![token, context, b_a, w1, b1, w2, b2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyModel {
    pub vocab_size: usize,
    pub params: ProxyParams,
    /// Output multiplier, the mean training label.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyReport {
    pub train_size: usize,
    pub holdout_size: usize,
    /// Mean relative error over training examples with positive reward.
    pub train_mre: Option<f64>,
    /// Mean relative error over held-out examples with positive reward.
    pub holdout_mre: Option<f64>,
    /// All rewards were equal, so the proxy can only learn a constant.
    pub degenerate: bool,
    /// Mean normalized squared error per epoch.
    pub loss_curve: Vec<f64>,
}

struct Pass {
    hidden_pre: Vec<Vec<f64>>,
    pool: Vec<f64>,
    m_pre: Vec<f64>,
    m: Vec<f64>,
    o: f64,
}

impl ProxyModel {
    fn pass(&self, tokens: &[u32]) -> Pass {
        let p = &self.params;
        let h = p.b_a.cols;
        let mut pool = vec![0.0; h];
        let mut hidden_pre = Vec::with_capacity(tokens.len());
        let mut prev = BOS;
        for &t in tokens {
            let a: Vec<f64> = (0..h).map(|j| p.token.at(t as usize, j) + p.context.at(prev as usize, j) + p.b_a.data[j]).collect();
            for (o, &v) in pool.iter_mut().zip(&a) {
                *o += gelu(v) / POOL_SCALE;
            }
            hidden_pre.push(a);
            prev = t;
        }
        let (m_pre, m, o) = self.head(&pool);
        Pass { hidden_pre, pool, m_pre, m, o }
    }

    fn check(&self, tokens: &[u32]) -> Result<(), ProxyError> {
        match tokens.iter().find(|&&t| t as usize >= self.vocab_size) {
            Some(&id) => Err(ProxyError::UnknownToken { id, vocab: self.vocab_size }),
            None => Ok(()),
        }
    }

    /// Estimated reward, always nonnegative.
    pub fn predict(&self, tokens: &[u32]) -> Result<f64, ProxyError> {
        self.check(tokens)?;
        let p = &self.params;
        let mut pool = vec![0.0; p.b_a.cols];
        let mut prev = BOS;
        for &t in tokens {
            let (tok, ctx) = (p.token.row(t as usize), p.context.row(prev as usize));
            for (j, o) in pool.iter_mut().enumerate() {
                *o += gelu(tok[j] + ctx[j] + p.b_a.data[j]) / POOL_SCALE;
            }
            prev = t;
        }
        Ok(softplus(self.head(&pool).2) * self.scale)
    }

    /// Hidden pre-activation, activation and output for a pooled vector.
    fn head(&self, pool: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let p = &self.params;
        let h = p.b_a.cols;
        let m_pre: Vec<f64> = (0..h).map(|j| (0..h).map(|i| pool[i] * p.w1.at(i, j)).sum::<f64>() + p.b1.data[j]).collect();
        let m: Vec<f64> = m_pre.iter().map(|&v| gelu(v)).collect();
        let o = m.iter().zip(&p.w2.data).map(|(a, b)| a * b).sum::<f64>() + p.b2.data[0];
        (m_pre, m, o)
    }

    /// Adds the gradient of `(softplus(o) - target)²·weight` and returns the
    /// unweighted squared error.
    fn accumulate(&self, tokens: &[u32], target: f64, weight: f64, g: &mut ProxyParams) -> f64 {
        let p = &self.params;
        let h = p.b_a.cols;
        let pass = self.pass(tokens);
        let err = softplus(pass.o) - target;
        let d_o = 2.0 * err * weight * sigmoid(pass.o);
        g.b2.data[0] += d_o;
        let mut d_m_pre = vec![0.0; h];
        for j in 0..h {
            g.w2.data[j] += d_o * pass.m[j];
            d_m_pre[j] = d_o * p.w2.data[j] * gelu_grad(pass.m_pre[j]);
            g.b1.data[j] += d_m_pre[j];
        }
        let mut d_pool = vec![0.0; h];
        for i in 0..h {
            for j in 0..h {
                *g.w1.at_mut(i, j) += pass.pool[i] * d_m_pre[j];
                d_pool[i] += p.w1.at(i, j) * d_m_pre[j];
            }
        }
        let mut prev = BOS;
        for (&t, a) in tokens.iter().zip(&pass.hidden_pre) {
            for j in 0..h {
                let d = d_pool[j] * gelu_grad(a[j]) / POOL_SCALE;
                *g.token.at_mut(t as usize, j) += d;
                *g.context.at_mut(prev as usize, j) += d;
                g.b_a.data[j] += d;
            }
            prev = t;
        }
        err * err
    }
}

/// Mean of `|pred - y| / y` over examples with `y > 0`; `None` if there are none.
pub fn mean_relative_error(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (pred, y) in pairs {
        if y > 0.0 {
            sum += (pred - y).abs() / y;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Fits a proxy to `(sequence, reward)` pairs. Deterministic given the seed.
pub fn train_proxy(
    vocab_size: usize,
    data: &[(Vec<u32>, f64)],
    cfg: &ProxyConfig,
) -> Result<(ProxyModel, ProxyReport), ProxyError> {
    if data.is_empty() {
        return Err(ProxyError::Empty);
    }
    if cfg.hidden == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || !(0.0..1.0).contains(&cfg.holdout) {
        return Err(ProxyError::Config(format!("{cfg:?}")));
    }
    for (index, (seq, r)) in data.iter().enumerate() {
        if !(r.is_finite() && *r >= 0.0) {
            return Err(ProxyError::BadReward { index, reward: *r });
        }
        if let Some(&id) = seq.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(ProxyError::UnknownToken { id, vocab: vocab_size });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = (data.len() as f64 * cfg.holdout).floor() as usize;
    let (hold, train) = order.split_at(n_hold);
    let (hold, mut train) = (hold.to_vec(), train.to_vec());

    let first = data[train[0]].1;
    let degenerate = data.iter().all(|(_, r)| *r == first);
    let mean = train.iter().map(|&i| data[i].1).sum::<f64>() / train.len() as f64;
    let scale = if mean > 0.0 { mean } else { 1.0 };

    let h = cfg.hidden;
    let mut params = ProxyParams::zeros(vocab_size, h);
    params.token = Mat::randn(vocab_size, h, cfg.init_std, &mut rng);
    params.context = Mat::randn(vocab_size, h, cfg.init_std, &mut rng);
    params.w1 = Mat::randn(h, h, 1.0 / (h as f64).sqrt(), &mut rng);
    params.w2 = Mat::randn(h, 1, 1.0 / (h as f64).sqrt(), &mut rng);
    // softplus(0.5413) = 1, the normalized mean label.
    params.b2.data[0] = 0.5413;
    let mut model = ProxyModel { vocab_size, params, scale };

    let mut adam = Adam::new(AdamConfig::default());
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        // Cosine decay to a tenth of the initial step size.
        let progress = epoch as f64 / cfg.epochs as f64;
        let lrs = vec![cfg.learning_rate * (0.1 + 0.45 * (1.0 + (std::f64::consts::PI * progress).cos())); 7];
        train.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in train.chunks(cfg.batch_size) {
            let mut g = ProxyParams::zeros(vocab_size, h);
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                total += model.accumulate(&data[i].0, data[i].1 / scale, w, &mut g);
            }
            if cfg.weight_decay > 0.0 {
                for (gt, pt) in g.tensors_mut().into_iter().zip(model.params.tensors()) {
                    for (gv, pv) in gt.data.iter_mut().zip(&pt.data) {
                        *gv += cfg.weight_decay * pv;
                    }
                }
            }
            clip_global_norm(g.tensors_mut(), 10.0);
            adam.update(model.params.tensors_mut(), g.tensors(), &lrs);
        }
        let loss = total / train.len() as f64;
        if !loss.is_finite() {
            return Err(ProxyError::NonFinite { epoch });
        }
        curve.push(loss);
    }

    let mre = |idx: &[usize]| {
        mean_relative_error(idx.iter().map(|&i| (softplus(model.pass(&data[i].0).o) * scale, data[i].1)))
    };
    let report = ProxyReport {
        train_size: train.len(),
        holdout_size: hold.len(),
        train_mre: mre(&train),
        holdout_mre: mre(&hold),
        degenerate,
        loss_curve: curve,
    };
    Ok((model, report))
}
