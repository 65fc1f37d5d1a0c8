//! Autoregressive sampling with a key/value cache and Gumbel-max draws.

use lawgen_core::scenario::{BOS, EOS, PAD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Model, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    /// Generated ids without BOS and EOS.
    pub tokens: Vec<u32>,
    /// Whether the model emitted EOS before the length limit.
    pub finished: bool,
}

fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    -(-u.ln()).ln()
}

/// Draws one sequence. Logits are divided by `temperature`; PAD and BOS are
/// never drawn.
pub fn sample_one<R: Rng + ?Sized>(
    model: &Model,
    temperature: f64,
    max_len: usize,
    rng: &mut R,
) -> Result<Sample, ModelError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(ModelError::Config(format!("temperature must be positive, got {temperature}")));
    }
    let max_len = max_len.min(model.cfg.context - 1);
    let mut cache = model.new_cache();
    let mut logits = model.step(&mut cache, BOS)?;
    let mut tokens = Vec::new();
    loop {
        if tokens.len() >= max_len {
            return Ok(Sample { tokens, finished: false });
        }
        let mut best = (f64::NEG_INFINITY, EOS);
        for (id, &l) in logits.iter().enumerate() {
            let id = id as u32;
            if id == PAD || id == BOS {
                continue;
            }
            let score = l / temperature + gumbel(rng);
            if score > best.0 {
                best = (score, id);
            }
        }
        if best.1 == EOS {
            return Ok(Sample { tokens, finished: true });
        }
        tokens.push(best.1);
        logits = model.step(&mut cache, best.1)?;
    }
}

/// Zero-temperature decoding: always takes the most likely allowed token.
pub fn sample_greedy(model: &Model, max_len: usize) -> Result<Sample, ModelError> {
    let max_len = max_len.min(model.cfg.context - 1);
    let mut cache = model.new_cache();
    let mut logits = model.step(&mut cache, BOS)?;
    let mut tokens = Vec::new();
    while tokens.len() < max_len {
        let mut best = (f64::NEG_INFINITY, EOS);
        for (id, &l) in logits.iter().enumerate() {
            let id = id as u32;
            if id != PAD && id != BOS && l > best.0 {
                best = (l, id);
            }
        }
        if best.1 == EOS {
            return Ok(Sample { tokens, finished: true });
        }
        tokens.push(best.1);
        logits = model.step(&mut cache, best.1)?;
    }
    Ok(Sample { tokens, finished: false })
}

/// Draws `count` sequences; sequence `i` uses stream `i` of a generator seeded
/// with `seed`, so the batch is identical however it is scheduled.
pub fn sample_batch(
    model: &Model,
    temperature: f64,
    count: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<Sample>, ModelError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_one(model, temperature, max_len, &mut rng)
        })
        .collect()
}

/// Keeps the `keep` highest-scoring samples, ties broken by draw order.
pub fn rerank(samples: Vec<Sample>, score: impl Fn(&Sample) -> f64, keep: usize) -> Vec<Sample> {
    let mut scored: Vec<(f64, usize, Sample)> = samples.into_iter().enumerate().map(|(i, s)| (score(&s), i, s)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(keep).map(|(_, _, s)| s).collect()
}
