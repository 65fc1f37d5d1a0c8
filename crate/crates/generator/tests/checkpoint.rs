use lawgen_generator::{train_proxy, Checkpoint, CheckpointError, Model, ModelConfig, ProxyConfig};

fn model() -> Model {
    Model::init(ModelConfig { vocab_size: 9, d_model: 8, heads: 2, layers: 2, d_ff: 8, context: 6 }, 4).unwrap()
}

#[test]
fn round_trip_preserves_every_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let m = model();
    let (proxy, _) = train_proxy(9, &[(vec![3, 4], 1.0), (vec![5], 2.0)], &ProxyConfig { epochs: 5, ..Default::default() }).unwrap();
    Checkpoint::new(&m, "abc", Some(proxy.clone())).save(&path).unwrap();
    let loaded = Checkpoint::load(&path, "abc").unwrap();
    assert_eq!(loaded.proxy, Some(proxy));
    let back = loaded.model().unwrap();
    assert_eq!(back, m);
    assert_eq!(back.forward(&[1, 3, 4]).unwrap(), m.forward(&[1, 3, 4]).unwrap());
}

#[test]
fn mismatched_vocabulary_is_refused() {
    let text = serde_json::to_string(&Checkpoint::new(&model(), "abc", None)).unwrap();
    match Checkpoint::from_json(&text, "def") {
        Err(CheckpointError::VocabMismatch { expected, found }) => assert_eq!((expected.as_str(), found.as_str()), ("def", "abc")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_versions_and_garbage_are_refused() {
    let mut ck = Checkpoint::new(&model(), "abc", None);
    ck.schema_version = 99;
    let text = serde_json::to_string(&ck).unwrap();
    assert!(matches!(Checkpoint::from_json(&text, "abc"), Err(CheckpointError::Version(99))));
    assert!(matches!(Checkpoint::from_json("{", "abc"), Err(CheckpointError::Format(_))));
    let mut ck = Checkpoint::new(&model(), "abc", None);
    ck.config.layers = 3;
    assert!(matches!(ck.model(), Err(CheckpointError::Model(_))));
}
