//! Acceptance suite: one PASS/FAIL line per criterion, with its tolerance.

use std::time::Instant;

use lawgen_core::analytics::{distinct_n, dtw, entropy, self_bleu, coverage, validity, SELF_BLEU_CAP};
use lawgen_core::reward::{score_scenario, WeightedCorpus};
use lawgen_core::road::{RoadStructure, RoadTag};
use lawgen_core::scenario::{decode, encode, sample_scenario, Vocabulary};
use lawgen_core::stl::{builtin_corpus, robustness_signal, LawSpec, MonitorOptions};
use lawgen_core::weighting::{
    assess_corpus, compute_weight, consistency, RiskAssessment, RuleTable, ScorerReport, REPORT_SCHEMA_VERSION,
};
use lawgen_generator::model::{sequence_log_prob, shift};
use lawgen_generator::{
    batch_loss, oracle_dataset, sample_batch, train_generator, train_proxy, Model, ModelConfig, ProxyConfig, ProxyModel,
    TrainConfig,
};
use lawgen_oracles::{dtw::dtw_enumerate, random, reward, stats, stl, transformer};
use lawgen_sim::{adversarial_scenarios, run_scenario, simulate_and_score, test_batch, BatchOptions, EgoPolicy, Mode, SimConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn info(msg: impl AsRef<str>) {
    println!("INFO {}", msg.as_ref());
}

fn stl_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = MonitorOptions::default();
    let (mut sign_checked, mut sign_bad, mut max_err) = (0usize, 0usize, 0.0f64);
    let mut failures = 0usize;
    for _ in 0..1000 {
        let depth = rng.random_range(1..=4);
        let len = rng.random_range(1..=200);
        let f = random::formula(&mut rng, depth);
        let t = random::trace(&mut rng, len);
        let Ok(fast) = robustness_signal(&f, &t, &opts) else {
            failures += 1;
            continue;
        };
        let slow = stl::robustness_signal(&f, &t);
        let truth = stl::satisfaction_signal(&f, &t);
        if fast.len() != slow.len() || truth.len() != slow.len() {
            failures += 1;
            continue;
        }
        for i in 0..fast.len() {
            if fast[i] != slow[i] {
                max_err = max_err.max((fast[i] - slow[i]).abs());
            }
            if fast[i] != 0.0 {
                sign_checked += 1;
                if (fast[i] > 0.0) != truth[i] {
                    sign_bad += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && sign_bad == 0 && max_err <= 1e-9 && secs <= 120.0,
        format!(
            "1000 pairs, {sign_checked} signed instants, sign mismatches {sign_bad}, max |Δρ| {max_err:.1e} (tol 1e-9), failures {failures}, {secs:.1}s (limit 120s)"
        ),
    )
}

fn codec_round_trip() -> Outcome {
    let start = Instant::now();
    let vocab = Vocabulary::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut bad_round, mut bad_idem) = (0usize, 0usize);
    for tag in RoadTag::ALL {
        let road = RoadStructure::load(tag);
        for _ in 0..2500 {
            let s = sample_scenario(&road, &mut rng, false);
            let seq = encode(&s);
            if decode(&seq, &road).as_ref() != Ok(&s) {
                bad_round += 1;
            }
            let idem = vocab.tokenize(&seq).and_then(|ids| {
                let once = vocab.detokenize(&ids)?;
                let twice = vocab.detokenize(&vocab.tokenize(&once)?)?;
                Ok(once == twice && vocab.tokenize(&once)? == ids)
            });
            if idem != Ok(true) {
                bad_idem += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad_round == 0 && bad_idem == 0 && secs <= 60.0,
        format!("10000 scenarios over S1-S4, round-trip failures {bad_round}, idempotence failures {bad_idem}, {secs:.1}s (limit 60s)"),
    )
}

fn report(w: &[f64]) -> ScorerReport {
    ScorerReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scorer_id: "t".into(),
        assessments: w
            .iter()
            .enumerate()
            .map(|(i, &w)| RiskAssessment {
                law_id: format!("law{i:02}"),
                severity: 0.0,
                occurrence: 0.0,
                justification: String::new(),
                scorer_id: "t".into(),
                weight: w,
            })
            .collect(),
        rejections: vec![],
        usage: None,
    }
}

fn weights_and_consistency() -> Outcome {
    let mut grid_bad = 0;
    for i in 0..=40 {
        for j in 0..=40 {
            let (s, o) = (i as f64 / 10.0, j as f64 / 10.0);
            if compute_weight(s, o).ok() != Some(s * o / 4.0) {
                grid_bad += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_err = 0.0f64;
    let mut pairs = 0;
    while pairs < 100 {
        // Quarter-unit weights so ties are common.
        let a: Vec<f64> = (0..10).map(|_| rng.random_range(0..=16) as f64 / 4.0).collect();
        let b: Vec<f64> = (0..10).map(|_| rng.random_range(0..=16) as f64 / 4.0).collect();
        let Ok(c) = consistency(&report(&a), &report(&b)) else { continue };
        max_err = max_err.max((c.spearman - stats::spearman(&a, &b)).abs()).max((c.mae - stats::mae(&a, &b)).abs());
        pairs += 1;
    }
    outcome(
        grid_bad == 0 && max_err <= 1e-12,
        format!("41x41 grid mismatches {grid_bad}; 100 report pairs, max error {max_err:.1e} (tol 1e-12)"),
    )
}

fn table_weights() -> WeightedCorpus {
    let corpus = builtin_corpus();
    let rep = assess_corpus(&corpus, &RuleTable::builtin()).unwrap();
    WeightedCorpus::from_report(corpus, &rep).unwrap()
}

fn reward_engine() -> Outcome {
    let laws = table_weights();
    let opts = MonitorOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases: Vec<(RoadTag, lawgen_core::scenario::Scenario)> =
        adversarial_scenarios().into_iter().map(|(_, s)| (s.road, s)).collect();
    while cases.len() < 200 {
        let tag = RoadTag::ALL[cases.len() % 4];
        cases.push((tag, sample_scenario(&RoadStructure::load(tag), &mut rng, false)));
    }
    let (mut mismatch, mut doubling, mut monotone, mut violating) = (0, 0, 0, 0);
    for (tag, s) in &cases {
        let road = RoadStructure::load(*tag);
        let trace = run_scenario(s, &road, &EgoPolicy::default(), &SimConfig::default()).unwrap();
        let subset = laws.subset_for_road(tag.as_str());
        let r = score_scenario(&trace, &laws, &subset, &opts).unwrap();
        let specs: Vec<(&LawSpec, f64)> =
            subset.iter().map(|id| (laws.corpus().get(id).unwrap(), laws.weight(id).unwrap())).collect();
        let (expected, who) = reward::reward(&trace, &specs);
        if r.r_overall != expected || r.attained_by != who {
            mismatch += 1;
        }
        if r.r_overall > 0.0 {
            violating += 1;
        }
        let mut doubled = laws.clone();
        for id in laws.corpus().ids() {
            doubled.set_weight(&id, 2.0 * laws.weight(&id).unwrap()).unwrap();
        }
        let d = score_scenario(&trace, &doubled, &subset, &opts).unwrap();
        if d.r_overall != 2.0 * r.r_overall || d.attained_by != r.attained_by {
            doubling += 1;
        }
        let mut part = subset.clone();
        part.shuffle(&mut rng);
        part.truncate(rng.random_range(1..=subset.len()));
        let p = score_scenario(&trace, &laws, &part, &opts).unwrap();
        if p.r_overall > r.r_overall {
            monotone += 1;
        }
    }
    info(format!("reward engine: {violating} of 200 traces have positive reward"));
    outcome(
        mismatch == 0 && doubling == 0 && monotone == 0,
        format!("200 traces, oracle mismatches {mismatch} (exact), doubling failures {doubling}, subset failures {monotone}"),
    )
}

fn dtw_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut max_err, mut checks) = (0.0f64, 0usize);
    for _ in 0..500 {
        let mut pts = || (0..5).map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)]).collect::<Vec<_>>();
        let (x, y) = (pts(), pts());
        for q in [1.0, 2.0] {
            for n in 1..=5 {
                for m in 1..=5 {
                    let a = dtw(&x[..n], &y[..m], q).unwrap();
                    let b = dtw_enumerate(&x[..n], &y[..m], q);
                    max_err = max_err.max((a - b).abs());
                    checks += 1;
                }
            }
        }
    }
    outcome(max_err <= 1e-9, format!("{checks} comparisons (q = 1, 2), max error {max_err:.1e} (tol 1e-9)"))
}

fn simulator() -> Outcome {
    let s3 = RoadStructure::load(RoadTag::S3);
    let laws = table_weights();
    let mut diverged = 0;
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut batch = adversarial_scenarios();
        batch.extend((0..24).map(|i| (format!("rand{i}"), sample_scenario(&s3, &mut rng, false))));
        let cfg = SimConfig { seed, ..SimConfig::default() };
        let traces = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                batch
                    .par_iter()
                    .map(|(_, s)| run_scenario(s, &s3, &EgoPolicy::default(), &cfg).unwrap().to_jsonl())
                    .collect::<Vec<_>>()
            })
        };
        let reference = traces(1);
        for threads in [1, 2, 4] {
            for _ in 0..2 {
                if traces(threads) != reference {
                    diverged += 1;
                }
            }
        }
        let opts = |threads| BatchOptions { threads, ..BatchOptions::default() };
        let run = |t| test_batch(&batch, &s3, &laws, &EgoPolicy::default(), &cfg, Mode::Counting, &opts(t)).unwrap();
        let one = run(1);
        if run(1) != one || run(4) != one {
            diverged += 1;
        }
    }
    let report = test_batch(
        &adversarial_scenarios(),
        &s3,
        &laws,
        &EgoPolicy::default(),
        &SimConfig::default(),
        Mode::Counting,
        &BatchOptions::default(),
    )
    .unwrap();
    let violated = report.violated_laws();
    info(format!("adversarial counting run violates {violated:?}; closed-form values are checked in the simulator tests"));
    outcome(
        diverged == 0 && violated.len() >= 6,
        format!("3 seeds x threads {{1, 2, 4}} x 2 runs, divergent runs {diverged}; {} of {} laws violated (need 6)", violated.len(), laws.corpus().len()),
    )
}

fn small(seed: u64) -> Model {
    let cfg = ModelConfig { vocab_size: 7, d_model: 8, heads: 2, layers: 2, d_ff: 12, context: 8 };
    let mut m = Model::init(cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for (_, t) in m.params.tensors_mut() {
        for v in t.data.iter_mut() {
            *v += rng.random_range(-0.2..0.2);
        }
    }
    m
}

fn model_correctness() -> Outcome {
    let (cfg, p) = transformer::tiny();
    let model = Model::new(cfg.clone(), p.clone()).unwrap();
    let tokens = [1, 3, 4, 2];
    let got = model.logits(&tokens).unwrap();
    let want = transformer::reference_logits(&cfg, &p, &tokens);
    let mut fwd_err = 0.0f64;
    for (t, row) in want.iter().enumerate() {
        for (v, w) in row.iter().enumerate() {
            fwd_err = fwd_err.max((got.at(t, v) - w).abs());
        }
    }

    let model = small(11);
    let seqs: Vec<Vec<u32>> = vec![vec![3, 4, 5], vec![6, 3], vec![]];
    let batch: Vec<(&[u32], f64)> = seqs.iter().map(|s| s.as_slice()).zip([0.3, -1.2, 0.0]).collect();
    let (_, grads) = batch_loss(&model, &batch).unwrap();
    let g = grads.tensors();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let ti = rng.random_range(0..g.len());
        let idx = rng.random_range(0..g[ti].1.data.len());
        let loss_at = |delta: f64| {
            let mut m = model.clone();
            m.params.tensors_mut()[ti].1.data[idx] += delta;
            batch_loss(&m, &batch).unwrap().0
        };
        let numeric = (loss_at(1e-5) - loss_at(-1e-5)) / 2e-5;
        let analytic = g[ti].1.data[idx];
        worst = worst.max((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6));
    }

    let mut leaks = 0;
    for case in 0..100u64 {
        let model = small(case % 20);
        let len = rng.random_range(2..=8);
        let tokens: Vec<u32> = (0..len).map(|_| rng.random_range(0..7)).collect();
        let k = rng.random_range(1..len);
        let mut changed = tokens.clone();
        changed[k] = rng.random_range(0..7);
        let (a, b) = (model.forward(&tokens).unwrap(), model.forward(&changed).unwrap());
        if (0..k).any(|t| a.row(t) != b.row(t)) {
            leaks += 1;
        }
    }
    outcome(
        fwd_err <= 1e-6 && worst <= 1e-4 && leaks == 0,
        format!("tiny oracle max error {fwd_err:.1e} (tol 1e-6); 50 FD probes, worst relative error {worst:.1e} (tol 1e-4); causal leaks {leaks} of 100"),
    )
}

fn two_atoms() -> Outcome {
    let cfg = ModelConfig { vocab_size: 8, d_model: 8, heads: 2, layers: 1, d_ff: 16, context: 6 };
    let mut model = Model::init(cfg, 1).unwrap();
    let data = vec![(vec![3], 1.0), (vec![4, 5], std::f64::consts::E)];
    let tc = TrainConfig { epochs: 500, batch_size: 2, learning_rate: 1e-2, log_z_learning_rate: 1e-1, seed: 5, ..Default::default() };
    let report = train_generator(&mut model, &data, &tc, None).unwrap();
    let lp = |s: &[u32]| {
        let (input, targets) = shift(s, 1, 2);
        sequence_log_prob(&model.forward(&input).unwrap(), &targets)
    };
    let gap = lp(&[4, 5]) - lp(&[3]);
    outcome((gap - 1.0).abs() <= 0.1 && report.steps <= 500, format!("gap {gap:.4} nats after {} steps (1.0 ± 0.1)", report.steps))
}

const TEMPERATURES: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 1.25];

struct Synthetic {
    vocab: Vocabulary,
    road: RoadStructure,
    data: Vec<(Vec<u32>, f64)>,
    proxy: ProxyModel,
    holdout_mre: Option<f64>,
    models: Vec<Model>,
}

fn synthetic_setup() -> Synthetic {
    let vocab = Vocabulary::standard();
    let road = RoadStructure::load(RoadTag::S4);
    let data = oracle_dataset(&vocab, &road, 2048, 0);
    let t = Instant::now();
    let (proxy, rep) = train_proxy(vocab.len(), &data, &ProxyConfig::default()).unwrap();
    info(format!("proxy: train MRE {:?}, held-out MRE {:?}, {:.0}s", rep.train_mre, rep.holdout_mre, t.elapsed().as_secs_f64()));
    let models = (0..3u64)
        .map(|seed| {
            let t = Instant::now();
            let cfg = ModelConfig { vocab_size: vocab.len(), d_model: 32, heads: 4, layers: 2, d_ff: 64, context: 80 };
            let mut model = Model::init(cfg, 100 + seed).unwrap();
            let tc = TrainConfig {
                epochs: 60,
                batch_size: 16,
                learning_rate: 1e-2,
                log_z_learning_rate: 3e-2,
                train_temperature: 25.0,
                seed: 200 + seed,
                ..Default::default()
            };
            let r = train_generator(&mut model, &data, &tc, None).unwrap();
            let c = &r.loss_curve;
            info(format!(
                "generator seed {seed}: loss epoch 1 {:.3}, epoch 10 {:.3}, final {:.3}, log Z {:.3}, {:.0}s",
                c[0],
                c[9.min(c.len() - 1)],
                c[c.len() - 1],
                r.log_z,
                t.elapsed().as_secs_f64()
            ));
            model
        })
        .collect();
    Synthetic { vocab, road, data, proxy, holdout_mre: rep.holdout_mre, models }
}

fn training_signal(s: &Synthetic) -> Outcome {
    let data_mean = s.data.iter().map(|d| d.1).sum::<f64>() / s.data.len() as f64;
    let mut wins = 0;
    let mut means = Vec::new();
    for (i, model) in s.models.iter().enumerate() {
        let samples = sample_batch(model, 1.0, 256, 79, 7000 + i as u64).unwrap();
        let mean = samples.iter().map(|x| s.proxy.predict(&x.tokens).unwrap()).sum::<f64>() / samples.len() as f64;
        if mean > data_mean {
            wins += 1;
        }
        means.push(format!("{mean:.3}"));
    }
    outcome(wins == 3, format!("sample proxy means [{}] vs data mean {data_mean:.3}, {wins}/3 seeds above", means.join(", ")))
}

fn proxy_fidelity(s: &Synthetic) -> Outcome {
    let mre = s.holdout_mre.unwrap_or(f64::INFINITY);
    let laws = table_weights();
    let subset = laws.subset_for_road("S4");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scenarios: Vec<_> = (0..32).map(|_| sample_scenario(&s.road, &mut rng, true)).collect();
    let opts = MonitorOptions::default();
    let t = Instant::now();
    for (i, sc) in scenarios.iter().enumerate() {
        let _ = simulate_and_score(&format!("s{i}"), sc, &s.road, &laws, &subset, &EgoPolicy::default(), &SimConfig::default(), &opts)
            .unwrap();
    }
    let sim = t.elapsed().as_secs_f64() / scenarios.len() as f64;
    let seqs: Vec<Vec<u32>> = scenarios.iter().map(|sc| s.vocab.tokenize(&encode(sc)).unwrap()).collect();
    let reps = 20;
    let t = Instant::now();
    let mut acc = 0.0;
    for _ in 0..reps {
        for q in &seqs {
            acc += s.proxy.predict(q).unwrap();
        }
    }
    let proxy = t.elapsed().as_secs_f64() / (reps * seqs.len()) as f64;
    assert!(acc.is_finite());
    let speedup = sim / proxy;
    outcome(
        mre <= 0.10 && speedup >= 100.0,
        format!(
            "held-out MRE {:.2}% (tol 10%); rollout {:.2} ms vs proxy {:.1} µs per scenario, {speedup:.0}x (need 100x)",
            mre * 100.0,
            sim * 1e3,
            proxy * 1e6
        ),
    )
}

fn temperature_trend(s: &Synthetic) -> Outcome {
    let mut agree = 0;
    let mut lines = Vec::new();
    for model in &s.models {
        let (mut d1, mut comp) = (Vec::new(), Vec::new());
        for t in TEMPERATURES {
            let samples = sample_batch(model, t, 256, 79, 4242).unwrap();
            let tokens: Vec<Vec<u32>> = samples.iter().map(|x| x.tokens.clone()).collect();
            let actions: Vec<Vec<String>> = tokens.iter().map(|x| s.vocab.detokenize(x).unwrap_or_default()).collect();
            d1.push(distinct_n(&tokens, 1).unwrap_or(0.0));
            comp.push(validity(&actions, &s.road).completeness);
        }
        let up = d1.windows(2).all(|w| w[1] >= w[0]);
        let down = comp.windows(2).all(|w| w[1] <= w[0]);
        if up && down {
            agree += 1;
        }
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        lines.push(format!("distinct-1 [{}] completeness [{}]", fmt(&d1), fmt(&comp)));
    }
    for l in &lines {
        info(format!("temperature trend: {l}"));
    }
    outcome(agree >= 2, format!("T = {TEMPERATURES:?}, 256 samples, monotone in {agree}/3 seeds (need 2)"))
}

fn metric_units() -> Outcome {
    let toks = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let mut failed: Vec<&str> = Vec::new();
    let mut check = |name: &'static str, ok: bool| {
        if !ok {
            failed.push(name);
        }
    };
    let x = [[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]];
    check("dtw identical", dtw(&x, &x, 1.0) == Ok(0.0));
    check("dtw single pair", dtw(&[[0.0, 0.0]], &[[3.0, 4.0]], 1.0) == Ok(5.0));
    check("distinct all unique", distinct_n(&[toks("a b c d e")], 1) == Ok(1.0));
    check("distinct repeated", distinct_n(&[toks("a a a a")], 1) == Ok(0.25));
    let same = vec![toks("a b c d e f"); 4];
    check("self-bleu identical", self_bleu(&same, SELF_BLEU_CAP) == Ok(1.0));
    check("self-bleu disjoint", self_bleu(&[toks("a b c d"), toks("e f g h")], SELF_BLEU_CAP).is_ok_and(|v| v < 0.05));
    check("entropy uniform-2", entropy(&[toks("a b")]) == Ok(1.0));
    check("entropy single", entropy(&[toks("a a a")]) == Ok(0.0));
    let core: Vec<u32> = (0..10).collect();
    check("coverage 8 of 10", coverage(&[(0..8).collect::<Vec<u32>>()], &core) == Ok(0.8));
    let road = RoadStructure::load(RoadTag::S3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut batch: Vec<Vec<String>> = (0..4).map(|_| encode(&sample_scenario(&road, &mut rng, true))).collect();
    let v = validity(&batch, &road);
    check("validity of encoded scenarios", v.completeness == 1.0 && v.satisfaction == 1.0);
    batch[2].retain(|t| !t.starts_with("ego+dest"));
    check("validity with one mangled", validity(&batch, &road).completeness == 0.75);
    outcome(failed.is_empty(), if failed.is_empty() { "11 unit examples exact".to_string() } else { format!("failed: {failed:?}") })
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<Outcome> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("{} {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push(o);
    };
    run("stl-oracle-equivalence", &stl_oracle);
    run("codec-round-trip", &codec_round_trip);
    run("weight-formula-and-consistency", &weights_and_consistency);
    run("reward-engine", &reward_engine);
    run("dtw-oracle", &dtw_oracle);
    run("simulator-determinism-and-reachability", &simulator);
    run("model-correctness", &model_correctness);
    let setup = Instant::now();
    let synthetic = synthetic_setup();
    info(format!("synthetic setup {:.0}s", setup.elapsed().as_secs_f64()));
    run("training-signal", &|| {
        let a = two_atoms();
        let b = training_signal(&synthetic);
        outcome(a.pass && b.pass, format!("{}; {}", a.detail, b.detail))
    });
    run("proxy-fidelity", &|| proxy_fidelity(&synthetic));
    run("temperature-trend", &|| temperature_trend(&synthetic));
    run("metric-unit-checks", &metric_units);

    let total = start.elapsed().as_secs_f64();
    info(format!("total {total:.0}s (budget 2700s)"));
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    // The report is the result; LAWGEN_ACCEPTANCE_STRICT=1 turns a FAIL into a failing exit status.
    if failed > 0 && std::env::var("LAWGEN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
