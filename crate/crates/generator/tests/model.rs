use lawgen_generator::model::{sequence_log_prob, shift};
use lawgen_generator::{batch_loss, Model, ModelConfig, ModelError, Params};
use lawgen_oracles::transformer::{gelu, layer_norm, reference_logits, tiny};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(heads: usize, layers: usize, seed: u64) -> Model {
    let cfg = ModelConfig { vocab_size: 7, d_model: 8, heads, layers, d_ff: 12, context: 8 };
    let mut p = Params::init(&cfg, seed);
    // Nonzero biases and gains so every parameter influences the output.
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for (_, m) in p.tensors_mut() {
        for v in m.data.iter_mut() {
            *v += rng.random_range(-0.2..0.2);
        }
    }
    Model::new(cfg, p).unwrap()
}

#[test]
fn tiny_model_matches_direct_multi_head_evaluation() {
    let (cfg, p) = tiny();
    let model = Model::new(cfg.clone(), p.clone()).unwrap();
    let tokens = [1, 3, 4];
    let got = model.logits(&tokens).unwrap();
    let want = reference_logits(&cfg, &p, &tokens);
    for t in 0..3 {
        for v in 0..5 {
            assert!((got.at(t, v) - want[t][v]).abs() < 1e-6, "t={t} v={v}: {} vs {}", got.at(t, v), want[t][v]);
        }
    }
}

#[test]
fn first_position_attends_only_to_itself() {
    // At t = 0 the attention output is exactly v_0, so the residual stream can
    // be written out by hand.
    let (cfg, p) = tiny();
    let model = Model::new(cfg.clone(), p.clone()).unwrap();
    let l = &p.layers[0];
    let x0: Vec<f64> = (0..4).map(|i| p.embed.at(2, i) + if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
    let a = &layer_norm(&vec![x0.clone()], &l.ln1_g.data, &l.ln1_b.data)[0];
    let v: Vec<f64> = (0..4).map(|j| (0..4).map(|i| a[i] * l.wv.at(i, j)).sum()).collect();
    let x1: Vec<f64> = (0..4).map(|j| x0[j] + (0..4).map(|i| v[i] * l.wo.at(i, j)).sum::<f64>() + l.bo.data[j]).collect();
    let c = &layer_norm(&vec![x1.clone()], &l.ln2_g.data, &l.ln2_b.data)[0];
    let u: Vec<f64> = (0..3).map(|j| gelu((0..4).map(|i| c[i] * l.w1.at(i, j)).sum::<f64>() + l.b1.data[j])).collect();
    let x2: Vec<f64> = (0..4).map(|j| x1[j] + (0..3).map(|i| u[i] * l.w2.at(i, j)).sum::<f64>() + l.b2.data[j]).collect();
    let z = &layer_norm(&vec![x2], &p.lnf_g.data, &p.lnf_b.data)[0];
    let got = model.logits(&[2]).unwrap();
    for k in 0..5 {
        let want: f64 = (0..4).map(|i| z[i] * p.w_out.at(i, k)).sum::<f64>() + p.b_out.data[k];
        assert!((got.at(0, k) - want).abs() < 1e-9);
    }
}

#[test]
fn single_head_reduces_to_plain_attention() {
    let model = small(1, 1, 3);
    let tokens = [1, 4, 2, 6, 5];
    let got = model.logits(&tokens).unwrap();
    // With one head the projections are used whole.
    let want = reference_logits(&model.cfg, &model.params, &tokens);
    for (t, row) in want.iter().enumerate() {
        for (v, w) in row.iter().enumerate() {
            assert!((got.at(t, v) - w).abs() < 1e-9);
        }
    }
}

#[test]
fn deeper_models_match_the_reference() {
    let model = small(4, 3, 5);
    let tokens = [1, 0, 3, 3, 6, 2];
    let got = model.logits(&tokens).unwrap();
    let want = reference_logits(&model.cfg, &model.params, &tokens);
    for (t, row) in want.iter().enumerate() {
        for (v, w) in row.iter().enumerate() {
            assert!((got.at(t, v) - w).abs() < 1e-9);
        }
    }
}

#[test]
fn analytic_gradients_match_central_differences() {
    let model = small(2, 2, 11);
    let seqs: Vec<Vec<u32>> = vec![vec![3, 4, 5], vec![6, 3], vec![]];
    let targets = [0.3, -1.2, 0.0];
    let batch: Vec<(&[u32], f64)> = seqs.iter().map(|s| s.as_slice()).zip(targets).collect();
    let (_, grads) = batch_loss(&model, &batch).unwrap();
    let grad_tensors = grads.tensors();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n_tensors = grad_tensors.len();
    let h = 1e-5;
    for probe in 0..50 {
        let ti = rng.random_range(0..n_tensors);
        let idx = rng.random_range(0..grad_tensors[ti].1.data.len());
        let loss_at = |delta: f64| {
            let mut m = model.clone();
            m.params.tensors_mut()[ti].1.data[idx] += delta;
            batch_loss(&m, &batch).unwrap().0
        };
        let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
        let analytic = grad_tensors[ti].1.data[idx];
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
        assert!(rel < 1e-4, "probe {probe} {}[{idx}]: analytic {analytic} numeric {numeric}", grad_tensors[ti].0);
    }
}

#[test]
fn kv_cache_decoding_matches_the_full_pass() {
    let model = small(2, 2, 4);
    let tokens = [1, 5, 3, 3, 4, 6, 2, 5];
    let full = model.logits(&tokens).unwrap();
    let mut cache = model.new_cache();
    for (t, &tok) in tokens.iter().enumerate() {
        let step = model.step(&mut cache, tok).unwrap();
        for (v, s) in step.iter().enumerate() {
            assert!((s - full.at(t, v)).abs() < 1e-10);
        }
    }
    assert_eq!(cache.len(), 8);
    assert!(matches!(model.step(&mut cache, 1), Err(ModelError::Overlong { .. })));
}

#[test]
fn sequence_log_prob_sums_targets() {
    let model = small(2, 1, 8);
    let (input, targets) = shift(&[3, 4], 1, 2);
    assert_eq!(input, vec![1, 3, 4]);
    assert_eq!(targets, vec![3, 4, 2]);
    let logp = model.forward(&input).unwrap();
    let want = logp.at(0, 3) + logp.at(1, 4) + logp.at(2, 2);
    assert_eq!(sequence_log_prob(&logp, &targets), want);
}

#[test]
fn invalid_inputs_are_rejected() {
    let model = small(2, 1, 1);
    assert!(matches!(model.forward(&[1; 9]), Err(ModelError::Overlong { len: 9, context: 8 })));
    assert!(matches!(model.forward(&[1, 7]), Err(ModelError::UnknownToken { id: 7, vocab: 7 })));
    assert!(matches!(model.forward(&[]), Err(ModelError::Empty)));
    let bad = ModelConfig { vocab_size: 7, d_model: 6, heads: 4, layers: 1, d_ff: 4, context: 4 };
    assert!(matches!(Model::init(bad, 0), Err(ModelError::Config(_))));
    let cfg = ModelConfig { vocab_size: 7, d_model: 8, heads: 2, layers: 2, d_ff: 12, context: 8 };
    let other = ModelConfig { layers: 1, ..cfg.clone() };
    assert!(Model::new(cfg, Params::zeros(&other)).is_err());
}

#[test]
fn desk_defaults() {
    let cfg = ModelConfig::desk(540);
    assert_eq!((cfg.d_model, cfg.heads, cfg.layers, cfg.context), (128, 8, 4, 128));
    assert_eq!(cfg.head_dim(), 16);
    assert!(Model::init(cfg, 0).unwrap().params.is_finite());
}

fn seq_strategy() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..7, 1..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rows_are_normalized(tokens in seq_strategy(), seed in 0u64..20) {
        let logp = small(2, 2, seed).forward(&tokens).unwrap();
        for t in 0..tokens.len() {
            let s: f64 = logp.row(t).iter().map(|v| v.exp()).sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn later_tokens_never_affect_earlier_positions(
        tokens in prop::collection::vec(0u32..7, 2..=8),
        k_frac in 0.0f64..1.0,
        replacement in 0u32..7,
        seed in 0u64..20,
    ) {
        let model = small(2, 2, seed);
        let k = 1 + ((tokens.len() - 1) as f64 * k_frac) as usize;
        let mut changed = tokens.clone();
        changed[k] = replacement;
        let (a, b) = (model.forward(&tokens).unwrap(), model.forward(&changed).unwrap());
        for t in 0..k {
            prop_assert_eq!(a.row(t), b.row(t));
        }
    }
}
