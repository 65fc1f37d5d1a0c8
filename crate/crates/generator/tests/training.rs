use lawgen_generator::model::{sequence_log_prob, shift};
use lawgen_generator::{target_log_reward, train_generator, Model, ModelConfig, TrainConfig, TrainError};

const BOS: u32 = 1;
const EOS: u32 = 2;

fn toy_model(seed: u64) -> Model {
    Model::init(ModelConfig { vocab_size: 8, d_model: 8, heads: 2, layers: 1, d_ff: 16, context: 6 }, seed).unwrap()
}

fn log_prob(model: &Model, seq: &[u32]) -> f64 {
    let (input, targets) = shift(seq, BOS, EOS);
    sequence_log_prob(&model.forward(&input).unwrap(), &targets)
}

fn toy_config(epochs: usize, batch_size: usize) -> TrainConfig {
    TrainConfig { epochs, batch_size, learning_rate: 1e-2, log_z_learning_rate: 1e-1, seed: 5, ..Default::default() }
}

#[test]
fn tempered_log_reward() {
    let e = std::f64::consts::E;
    assert!((target_log_reward(e, 100.0, 1e-6) - 1.0).abs() < 1e-15);
    assert!((target_log_reward(e, 50.0, 1e-6) - 2.0).abs() < 1e-15);
    assert!((target_log_reward(e * e, 125.0, 1e-6) - 1.6).abs() < 1e-15);
    assert_eq!(target_log_reward(0.0, 100.0, 1e-6), 1e-6f64.ln());
    assert_eq!(target_log_reward(1e-9, 100.0, 1e-6), 1e-6f64.ln());
}

#[test]
fn two_atoms_settle_one_nat_apart() {
    // At the optimum log P(a) + log Z = log R(a) for both atoms, so their
    // log-probabilities differ by ln e - ln 1 = 1.
    let mut model = toy_model(1);
    let data = vec![(vec![3], 1.0), (vec![4, 5], std::f64::consts::E)];
    let report = train_generator(&mut model, &data, &toy_config(500, 2), None).unwrap();
    assert_eq!(report.steps, 500);
    let gap = log_prob(&model, &[4, 5]) - log_prob(&model, &[3]);
    assert!((gap - 1.0).abs() < 0.1, "gap {gap}");
    assert!(report.loss_curve.last().unwrap() < &1e-3);
}

#[test]
fn equal_rewards_give_a_uniform_distribution_over_the_support() {
    let mut model = toy_model(2);
    let data = vec![(vec![3], 1.0), (vec![4, 4], 1.0), (vec![5, 6, 7], 1.0)];
    train_generator(&mut model, &data, &toy_config(400, 3), None).unwrap();
    let lp: Vec<f64> = data.iter().map(|(s, _)| log_prob(&model, s)).collect();
    for w in lp.windows(2) {
        assert!((w[0] - w[1]).abs() < 0.1, "{lp:?}");
    }
}

#[test]
fn training_is_deterministic() {
    let data = vec![(vec![3, 4], 0.5), (vec![5], 2.0), (vec![6, 6, 3], 1.0)];
    let run = || {
        let mut model = toy_model(3);
        let report = train_generator(&mut model, &data, &toy_config(20, 2), None).unwrap();
        (report, model.params)
    };
    let (a, pa) = run();
    let (b, pb) = run();
    assert_eq!(a, b);
    assert_eq!(pa, pb);
}

#[test]
fn online_samples_are_scored_and_mixed_in() {
    let data = vec![(vec![3, 4], 0.5), (vec![5], 2.0)];
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let score = |t: &[u32]| {
        calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        if t.first() == Some(&3) {
            1.0
        } else {
            0.0
        }
    };
    let cfg = TrainConfig { online_fraction: 0.5, ..toy_config(10, 4) };
    let mut model = toy_model(4);
    let a = train_generator(&mut model, &data, &cfg, Some(&score)).unwrap();
    assert!(calls.load(std::sync::atomic::Ordering::Relaxed) > 0);
    assert_eq!(a.loss_curve.len(), 10);
    let mut again = toy_model(4);
    let b = train_generator(&mut again, &data, &cfg, Some(&score)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overlong_sequences_are_skipped() {
    let mut model = toy_model(5);
    let data = vec![(vec![3; 6], 1.0), (vec![4], 1.0)];
    let report = train_generator(&mut model, &data, &toy_config(2, 2), None).unwrap();
    assert_eq!(report.skipped, 1);
    let none = vec![(vec![3; 6], 1.0)];
    assert_eq!(train_generator(&mut model, &none, &toy_config(2, 2), None), Err(TrainError::EmptyDataset));
}

#[test]
fn invalid_inputs_are_reported() {
    let mut model = toy_model(6);
    let data = vec![(vec![3], 1.0), (vec![4], -1.0)];
    assert_eq!(
        train_generator(&mut model, &data, &toy_config(2, 2), None),
        Err(TrainError::BadReward { index: 1, reward: -1.0 })
    );
    let good = vec![(vec![3], 1.0)];
    for cfg in [
        TrainConfig { batch_size: 0, ..Default::default() },
        TrainConfig { train_temperature: 0.0, ..Default::default() },
        TrainConfig { online_fraction: 1.5, ..Default::default() },
    ] {
        assert!(matches!(train_generator(&mut model, &good, &cfg, None), Err(TrainError::Config(_))));
    }
}

#[test]
fn non_finite_loss_aborts_with_diagnostics() {
    let mut model = toy_model(7);
    model.params.w_out.data[0] = f64::NAN;
    let err = train_generator(&mut model, &[(vec![3], 1.0)], &toy_config(2, 1), None).unwrap_err();
    match err {
        TrainError::NonFinite { epoch, step, loss, .. } => {
            assert_eq!((epoch, step), (0, 0));
            assert!(loss.is_nan());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn config_round_trips_through_json_with_defaults() {
    let cfg: TrainConfig = serde_json::from_str(r#"{"epochs": 7}"#).unwrap();
    assert_eq!(cfg, TrainConfig { epochs: 7, ..Default::default() });
}
