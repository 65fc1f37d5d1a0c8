//! Training so that sequence probability tracks reward.
//!
//! For a batch of sequences `A_s` with rewards `R_s` the loss is
//! `mean_s (log P(A_s) + log Z - g(log R_s))²`, where `g` rescales the log
//! reward by `100 / train_temperature` and clips it below at `log ε`. At the
//! optimum `P(A) = R(A)^(100/T) / Z`.

use lawgen_core::scenario::{BOS, EOS};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adam::{clip_global_norm, Adam, AdamConfig};
use crate::model::{sequence_dlogits, sequence_log_prob, shift, Model, ModelError, Params};
use crate::sample::sample_batch;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training set has no usable sequences")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("reward {reward} of example {index} is negative or not finite")]
    BadReward { index: usize, reward: f64 },
    #[error("non-finite loss {loss} at epoch {epoch}, step {step} (log Z = {log_z}, gradient norm {grad_norm})")]
    NonFinite { epoch: usize, step: u64, loss: f64, log_z: f64, grad_norm: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Step size of the scalar `log Z`.
    pub log_z_learning_rate: f64,
    /// Reward exponent is `100 / train_temperature`; 100 leaves rewards as is.
    pub train_temperature: f64,
    /// ε of the lower clip on log rewards.
    pub reward_floor: f64,
    /// Share of each batch drawn from the model itself and scored online.
    pub online_fraction: f64,
    pub online_temperature: f64,
    /// Global gradient-norm bound; 0 disables clipping.
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            epochs: 200,
            learning_rate: 3e-3,
            log_z_learning_rate: 3e-2,
            train_temperature: 100.0,
            reward_floor: 1e-6,
            online_fraction: 0.0,
            online_temperature: 1.0,
            grad_clip: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("log_z_learning_rate", self.log_z_learning_rate),
            ("train_temperature", self.train_temperature),
            ("reward_floor", self.reward_floor),
            ("online_temperature", self.online_temperature),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.online_fraction) {
            return bad(format!("online_fraction must lie in [0, 1], got {}", self.online_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub loss_curve: Vec<f64>,
    pub steps: u64,
    pub log_z: f64,
    /// Training sequences dropped for not fitting the context.
    pub skipped: usize,
}

/// `g(log R)`: tempered log reward clipped below at `log floor`.
pub fn target_log_reward(reward: f64, train_temperature: f64, floor: f64) -> f64 {
    let lr = if reward > 0.0 { reward.ln() * 100.0 / train_temperature } else { f64::NEG_INFINITY };
    lr.max(floor.ln())
}

/// Loss and gradient on one batch of `(sequence, target log reward)` pairs.
pub fn batch_loss(model: &Model, batch: &[(&[u32], f64)]) -> Result<(f64, Params), ModelError> {
    let mut grads = Params::zeros(&model.cfg);
    let b = batch.len() as f64;
    let log_z = model.log_z();
    let mut loss = 0.0;
    for (seq, target) in batch {
        let (input, targets) = shift(seq, BOS, EOS);
        let cache = model.forward_cached(&input)?;
        let resid = sequence_log_prob(&cache.logp, &targets) + log_z - target;
        loss += resid * resid / b;
        let coef = 2.0 * resid / b;
        model.backward(&cache, &sequence_dlogits(&cache.logp, &targets, coef), &mut grads);
        grads.log_z.data[0] += coef;
    }
    Ok((loss, grads))
}

/// Online reward callback for sequences the model draws during training.
pub type OnlineReward<'a> = &'a (dyn Fn(&[u32]) -> f64 + Sync);

/// Trains `model` on `(sequence, reward)` pairs, optionally mixing in model
/// samples scored by `online`. Deterministic for a fixed configuration.
pub fn train_generator(
    model: &mut Model,
    data: &[(Vec<u32>, f64)],
    cfg: &TrainConfig,
    online: Option<OnlineReward<'_>>,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    for (index, (_, r)) in data.iter().enumerate() {
        if !(r.is_finite() && *r >= 0.0) {
            return Err(TrainError::BadReward { index, reward: *r });
        }
    }
    let fits = |s: &Vec<u32>| s.len() < model.cfg.context;
    let usable: Vec<usize> = (0..data.len()).filter(|&i| fits(&data[i].0)).collect();
    if usable.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let skipped = data.len() - usable.len();
    let n_online = if online.is_some() { (cfg.batch_size as f64 * cfg.online_fraction).round() as usize } else { 0 };
    let n_offline = (cfg.batch_size - n_online).max(1);
    let max_len = model.cfg.context - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(AdamConfig::default());
    let n_tensors = model.params.tensors().len();
    let total_steps = (cfg.epochs * usable.len().div_ceil(n_offline)).max(1);
    let target = |r: f64| target_log_reward(r, cfg.train_temperature, cfg.reward_floor);

    let mut order = usable.clone();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(n_offline) {
            let mut owned: Vec<(Vec<u32>, f64)> = Vec::new();
            if let (Some(score), true) = (online, n_online > 0) {
                let seed = cfg.seed ^ (adam.steps() + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                for s in sample_batch(model, cfg.online_temperature, n_online, max_len, seed)? {
                    let r = if s.finished { score(&s.tokens) } else { 0.0 };
                    owned.push((s.tokens, target(r)));
                }
            }
            let mut batch: Vec<(&[u32], f64)> = chunk.iter().map(|&i| (data[i].0.as_slice(), target(data[i].1))).collect();
            batch.extend(owned.iter().map(|(s, t)| (s.as_slice(), *t)));

            let (loss, mut grads) = batch_loss(model, &batch)?;
            let grad_norm = clip_global_norm(grads.tensors_mut().into_iter().map(|(_, m)| m).collect(), cfg.grad_clip);
            if !loss.is_finite() || !grad_norm.is_finite() {
                return Err(TrainError::NonFinite { epoch, step: adam.steps(), loss, log_z: model.log_z(), grad_norm });
            }
            // Cosine decay of both step sizes to a tenth of their initial value.
            let progress = adam.steps() as f64 / total_steps as f64;
            let decay = 0.1 + 0.45 * (1.0 + (std::f64::consts::PI * progress).cos());
            let mut lrs = vec![cfg.learning_rate * decay; n_tensors];
            lrs[n_tensors - 1] = cfg.log_z_learning_rate * decay;
            adam.update(
                model.params.tensors_mut().into_iter().map(|(_, m)| m).collect(),
                grads.tensors().into_iter().map(|(_, m)| m).collect(),
                &lrs,
            );
            total += loss;
            batches += 1;
        }
        curve.push(total / batches as f64);
    }
    Ok(TrainReport { loss_curve: curve, steps: adam.steps(), log_z: model.log_z(), skipped })
}
