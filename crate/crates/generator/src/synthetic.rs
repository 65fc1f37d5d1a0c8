//! Synthetic reward oracle with a known closed form, for calibrating training
//! and the proxy without running the simulator.

use lawgen_core::road::RoadStructure;
use lawgen_core::scenario::{encode, sample_scenario, ValueKind, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reward of the oracle: `0.1 + bin / 10`, where `bin` is the quantized ego
/// start speed. `None` when the sequence has no ego speed value.
pub fn oracle_reward(vocab: &Vocabulary, tokens: &[u32]) -> Option<f64> {
    let head = vocab.head_id("ego+speed")?;
    let base = vocab.value_id(ValueKind::Speed, 0);
    let bins = ValueKind::Speed.bins().count() as u32;
    let pos = tokens.iter().position(|&t| t == head)?;
    let v = *tokens.get(pos + 1)?;
    (base..base + bins).contains(&v).then(|| 0.1 + (v - base) as f64 / 10.0)
}

/// `n` random scenarios on `road`, tokenized and labelled by [`oracle_reward`].
pub fn oracle_dataset(vocab: &Vocabulary, road: &RoadStructure, n: usize, seed: u64) -> Vec<(Vec<u32>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let ids = vocab.tokenize(&encode(&sample_scenario(road, &mut rng, true))).expect("quantized scenarios tokenize");
            let r = oracle_reward(vocab, &ids).expect("every scenario has an ego speed");
            (ids, r)
        })
        .collect()
}
