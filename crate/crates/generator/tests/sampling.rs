use lawgen_generator::{rerank, sample_batch, sample_greedy, Model, ModelConfig, ModelError, Sample};

fn model(seed: u64) -> Model {
    Model::init(ModelConfig { vocab_size: 12, d_model: 16, heads: 4, layers: 2, d_ff: 32, context: 24 }, seed).unwrap()
}

#[test]
fn vanishing_temperature_is_greedy() {
    let m = model(1);
    let greedy = sample_greedy(&m, 30).unwrap();
    assert_eq!(greedy, sample_greedy(&m, 30).unwrap());
    for s in sample_batch(&m, 1e-6, 16, 30, 9).unwrap() {
        assert_eq!(s, greedy);
    }
}

#[test]
fn batch_contract() {
    let m = model(2);
    let samples = sample_batch(&m, 1.0, 256, 10, 3).unwrap();
    assert_eq!(samples.len(), 256);
    for s in &samples {
        assert!(s.tokens.len() <= 10);
        assert!(s.tokens.iter().all(|&t| t > 2 && t < 12), "{s:?}");
        if !s.finished {
            assert_eq!(s.tokens.len(), 10);
        }
    }
    // The context bounds the length whatever is requested.
    for s in sample_batch(&m, 2.0, 32, 1000, 4).unwrap() {
        assert!(s.tokens.len() <= 23);
    }
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let m = model(3);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| sample_batch(&m, 1.0, 64, 20, 5).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_ne!(one, sample_batch(&m, 1.0, 64, 20, 6).unwrap());
}

#[test]
fn higher_temperature_spreads_first_tokens() {
    let m = model(4);
    let distinct = |t: f64| {
        let s = sample_batch(&m, t, 200, 1, 8).unwrap();
        s.iter().map(|s| s.tokens.first().copied()).collect::<std::collections::BTreeSet<_>>().len()
    };
    assert!(distinct(0.1) <= distinct(1.0));
    assert!(distinct(1.0) <= distinct(5.0));
}

#[test]
fn temperature_must_be_positive() {
    let m = model(5);
    assert!(matches!(sample_batch(&m, 0.0, 1, 5, 0), Err(ModelError::Config(_))));
    assert!(matches!(sample_batch(&m, f64::NAN, 1, 5, 0), Err(ModelError::Config(_))));
}

#[test]
fn rerank_keeps_the_best() {
    let s = |t: Vec<u32>| Sample { tokens: t, finished: true };
    let kept = rerank(vec![s(vec![3]), s(vec![5]), s(vec![4]), s(vec![5])], |x| x.tokens[0] as f64, 2);
    assert_eq!(kept, vec![s(vec![5]), s(vec![5])]);
}
