//! Pipeline stages. Each reads prior artifacts, writes its outputs and a
//! manifest next to its primary output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lawgen_core::analytics::{metric_report, TrajectorySet};
use lawgen_core::reward::WeightedCorpus;
use lawgen_core::road::RoadStructure;
use lawgen_core::scenario::{decode, decode_structure, encode, sample_scenario, Scenario, Vocabulary};
use lawgen_core::stl::{builtin_corpus, LawCorpus, MonitorOptions};
use lawgen_core::weighting::{
    apply_overrides, assess_corpus, HttpScorer, Overrides, RuleTable, ScorerReport, TableEntry, WeightError,
};
use lawgen_generator::{rerank, sample_batch, train_generator, train_proxy, Checkpoint, Model, ProxyModel};
use lawgen_sim::{run_scenario, simulate_and_score, test_batch, BatchOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::artifacts::*;
use crate::config::{stage_seed, RunConfig, ScorerKind};
use crate::error::{input, stage, CliError};
use crate::plots;

/// Resolved configuration plus where it came from.
pub struct Context {
    pub cfg: RunConfig,
    pub config_path: Option<PathBuf>,
}

fn shown(p: &Path) -> String {
    p.display().to_string()
}

impl Context {
    /// Writes `<anchor stem>.manifest.json` beside `anchor`.
    fn write_manifest(
        &self,
        subcommand: &str,
        anchor: &Path,
        inputs: &[(&str, &Path)],
        outputs: &[(&str, &Path)],
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            config_path: self.config_path.as_deref().map(shown),
            seed: self.cfg.seed,
            inputs: inputs.iter().map(|(k, p)| (k.to_string(), shown(p))).collect(),
            outputs: outputs.iter().map(|(k, p)| (k.to_string(), shown(p))).collect(),
            config: self.cfg.snapshot(),
        };
        write_json(&manifest_path(anchor), &manifest)
    }

    fn road(&self) -> RoadStructure {
        RoadStructure::load(self.cfg.road)
    }

    fn corpus(&self) -> Result<LawCorpus, CliError> {
        match &self.cfg.laws {
            Some(p) => LawCorpus::load(p).map_err(input(p.display())),
            None => Ok(builtin_corpus()),
        }
    }

    /// Law corpus weighted by a scorer report, or uniformly without one.
    fn weighted(&self, weights: Option<&Path>) -> Result<WeightedCorpus, CliError> {
        let corpus = self.corpus()?;
        match weights {
            Some(p) => {
                let report = ScorerReport::load(p).map_err(input(p.display()))?;
                WeightedCorpus::from_report(corpus, &report).map_err(input(p.display()))
            }
            None => Ok(WeightedCorpus::uniform(corpus)),
        }
    }
}

fn vocab_check(found: &str, path: &Path) -> Result<Vocabulary, CliError> {
    let vocab = Vocabulary::standard();
    if vocab.hash() != found {
        return Err(CliError::Input(format!("{}: vocabulary hash {found} does not match {}", path.display(), vocab.hash())));
    }
    Ok(vocab)
}

/// Scores every law and writes the scorer report. Rejected laws are a stage
/// failure, reported after the partial report is written.
pub fn weigh(ctx: &Context, out: &Path) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let corpus = ctx.corpus()?;
    let mut report = match cfg.weigh.scorer {
        ScorerKind::Table => {
            let table = match &cfg.weigh.table {
                Some(p) => RuleTable::load(p).map_err(input(p.display()))?,
                None => RuleTable::builtin(),
            };
            assess_corpus(&corpus, &table).map_err(|e| match e {
                WeightError::Uncovered(_) => CliError::Input(format!("rule table: {e}")),
                e => CliError::Stage(format!("weigh: {e}")),
            })?
        }
        ScorerKind::Http => {
            let http = cfg.weigh.http.clone().expect("checked by resolve").with_env_overrides();
            assess_corpus(&corpus, &HttpScorer::new(http)).map_err(stage("weigh"))?
        }
        ScorerKind::Uniform => {
            // S = O = 2 gives weight 1 for every law.
            let entry = TableEntry { severity: 2.0, occurrence: 2.0, justification: "uniform weighting".into() };
            let table = RuleTable {
                scorer_id: "uniform".into(),
                laws: corpus.ids().into_iter().map(|id| (id, entry.clone())).collect(),
            };
            assess_corpus(&corpus, &table).map_err(stage("weigh"))?
        }
    };
    let mut inputs: Vec<(&str, &Path)> = Vec::new();
    if let Some(p) = &cfg.laws {
        inputs.push(("laws", p));
    }
    if let (ScorerKind::Table, Some(p)) = (cfg.weigh.scorer, &cfg.weigh.table) {
        inputs.push(("table", p));
    }
    if let Some(p) = &cfg.weigh.overrides {
        let o = Overrides::load(p).map_err(input(p.display()))?;
        apply_overrides(&mut report, &corpus, &o).map_err(input(p.display()))?;
        inputs.push(("overrides", p));
    }
    write_text(out, &format!("{}\n", report.to_json()))?;
    ctx.write_manifest("weigh", out, &inputs, &[("weights", out)])?;
    if !report.is_complete() {
        let ids: Vec<&str> = report.rejections.iter().map(|r| r.law_id.as_str()).collect();
        return Err(CliError::Stage(format!("no accepted score for {}", ids.join(", "))));
    }
    Ok(())
}

/// Writes the action sequence and token ids of every scenario.
pub fn encode_scenarios(ctx: &Context, scenarios: &Path, out: &Path) -> Result<(), CliError> {
    let vocab = Vocabulary::standard();
    let records = load_scenarios(scenarios)?
        .into_iter()
        .map(|(id, s)| {
            let actions = encode(&s);
            let ids = vocab.tokenize(&actions).map_err(input(format!("scenario `{id}`")))?;
            Ok(EncodedRecord { id, actions, ids })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let batch = EncodedBatch { schema_version: ARTIFACT_SCHEMA_VERSION, vocab_hash: vocab.hash(), records };
    write_json(out, &batch)?;
    ctx.write_manifest("encode", out, &[("scenarios", scenarios)], &[("encoded", out)])
}

/// Samples valid scenarios, simulates them and records their reward.
pub fn seed_data(ctx: &Context, weights: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let road = ctx.road();
    let vocab = Vocabulary::standard();
    let laws = ctx.weighted(weights)?;
    let subset = laws.subset_for_road(cfg.road.as_str());
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "seed-data"));
    let scenarios: Vec<(String, Scenario)> =
        (0..cfg.seed_data.count).map(|i| (format!("seed-{i:05}"), sample_scenario(&road, &mut rng, true))).collect();
    let opts = MonitorOptions::default();
    let records = scenarios
        .into_par_iter()
        .map(|(id, scenario)| {
            let (_, record) = simulate_and_score(&id, &scenario, &road, &laws, &subset, &cfg.policy, &cfg.sim, &opts)
                .map_err(stage(format!("scenario `{id}`")))?;
            let ids = vocab.tokenize(&encode(&scenario)).map_err(stage(format!("scenario `{id}`")))?;
            Ok(DatasetRecord { id, scenario, ids, reward: record.r_overall, attained_by: record.attained_by })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let dataset = Dataset { schema_version: ARTIFACT_SCHEMA_VERSION, road: cfg.road, vocab_hash: vocab.hash(), records };
    write_json(out, &dataset)?;
    let inputs: Vec<(&str, &Path)> = weights.map(|w| ("weights", w)).into_iter().collect();
    ctx.write_manifest("seed-data", out, &inputs, &[("dataset", out)])
}

/// Fits the proxy, then trains the generator with proxy-scored online samples.
pub fn train(ctx: &Context, dataset_path: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let dataset: Dataset = read_json(dataset_path)?;
    let vocab = vocab_check(&dataset.vocab_hash, dataset_path)?;
    if dataset.road != cfg.road {
        return Err(CliError::Input(format!("dataset is for {}, the run for {}", dataset.road, cfg.road)));
    }
    let road = ctx.road();
    let data: Vec<(Vec<u32>, f64)> = dataset.records.iter().map(|r| (r.ids.clone(), r.reward)).collect();
    let (proxy, proxy_report) = train_proxy(vocab.len(), &data, &cfg.proxy).map_err(stage("proxy training"))?;
    let score = |ids: &[u32]| proxy_score(&vocab, &road, &proxy, ids).unwrap_or(0.0);
    let mut model = Model::init(cfg.model.with_vocab(vocab.len()), cfg.train.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let online = (cfg.train.online_fraction > 0.0).then_some(&score as &(dyn Fn(&[u32]) -> f64 + Sync));
    let report = train_generator(&mut model, &data, &cfg.train, online).map_err(stage("generator training"))?;
    Checkpoint::new(&model, &vocab.hash(), Some(proxy)).save(out).map_err(stage(out.display()))?;
    let training = TrainingManifest {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        dataset: shown(dataset_path),
        model: serde_json::to_value(&cfg.model).expect("serializes"),
        train: serde_json::to_value(&cfg.train).expect("serializes"),
        proxy: serde_json::to_value(&cfg.proxy).expect("serializes"),
        proxy_report,
        loss_curve: report.loss_curve,
        steps: report.steps,
        log_z: report.log_z,
        skipped: report.skipped,
    };
    let training_path = sibling(out, "training.json");
    write_json(&training_path, &training)?;
    ctx.write_manifest("train", out, &[("dataset", dataset_path)], &[("checkpoint", out), ("training", &training_path)])
}

/// Proxy reward of a sequence that decodes to a valid scenario, else `None`.
fn proxy_score(vocab: &Vocabulary, road: &RoadStructure, proxy: &ProxyModel, ids: &[u32]) -> Option<f64> {
    let actions = vocab.detokenize(ids).ok()?;
    decode(&actions, road).ok()?;
    proxy.predict(ids).ok()
}

/// Samples token sequences from a checkpoint and decodes them.
pub fn generate(ctx: &Context, checkpoint: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let vocab = Vocabulary::standard();
    let ckpt = Checkpoint::load(checkpoint, &vocab.hash()).map_err(input(checkpoint.display()))?;
    let model = ckpt.model().map_err(input(checkpoint.display()))?;
    let road = ctx.road();
    let g = &cfg.generate;
    let draw = g.count * g.rerank;
    let mut samples = sample_batch(&model, g.temperature, draw, g.max_len, stage_seed(cfg.seed, "generate"))
        .map_err(stage("sampling"))?;
    if g.rerank > 1 {
        let proxy = ckpt.proxy.as_ref().ok_or_else(|| CliError::Input("reranking needs a checkpoint with a proxy".into()))?;
        samples = rerank(samples, |s| proxy_score(&vocab, &road, proxy, &s.tokens).unwrap_or(0.0), g.count);
    }
    let records = samples
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| {
            let actions = vocab.detokenize(&s.tokens).unwrap_or_default();
            let complete = decode_structure(&actions, road.tag).is_ok();
            let scenario = decode(&actions, &road).ok();
            let proxy_reward = match (&ckpt.proxy, &scenario) {
                (Some(p), Some(_)) => p.predict(&s.tokens).ok(),
                _ => None,
            };
            SampleRecord { id: format!("gen-{i:04}"), ids: s.tokens, actions, finished: s.finished, complete, scenario, proxy_reward }
        })
        .collect();
    let set = SampleSet {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        road: cfg.road,
        vocab_hash: vocab.hash(),
        temperature: g.temperature,
        samples: records,
    };
    write_json(out, &set)?;
    ctx.write_manifest("generate", out, &[("checkpoint", checkpoint)], &[("samples", out)])
}

/// Simulates a scenario batch, monitors the road's laws and charts violations per law.
pub fn test(ctx: &Context, scenarios: &Path, weights: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let batch = load_scenarios(scenarios)?;
    let laws = ctx.weighted(weights)?;
    let opts = BatchOptions { threads: cfg.threads, monitor: MonitorOptions::default() };
    let report = test_batch(&batch, &ctx.road(), &laws, &cfg.policy, &cfg.sim, cfg.test.mode, &opts)
        .map_err(stage("testing"))?;
    write_text(out, &format!("{}\n", report.to_json()))?;
    let chart = sibling(out, "svg");
    let bars: Vec<(String, f64)> = report.counts.iter().map(|(k, v)| (k.clone(), *v as f64)).collect();
    plots::bar_chart(&chart, &format!("Violations per law on {}", cfg.road), "violations", &bars)?;
    for f in report.failures() {
        eprintln!("warning: scenario `{}` failed: {}", f.scenario_id, f.error.as_deref().unwrap_or(""));
    }
    let mut inputs = vec![("scenarios", scenarios)];
    inputs.extend(weights.map(|w| ("weights", w)));
    ctx.write_manifest("test", out, &inputs, &[("report", out), ("chart", &chart)])
}

/// Diversity, validity and trajectory metrics of a generated batch.
pub fn analyze(ctx: &Context, samples_path: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let set: SampleSet = read_json(samples_path)?;
    let vocab = vocab_check(&set.vocab_hash, samples_path)?;
    if set.road != cfg.road {
        return Err(CliError::Input(format!("samples are for {}, the run for {}", set.road, cfg.road)));
    }
    let road = ctx.road();
    let tokens: Vec<Vec<u32>> = set.samples.iter().map(|s| s.ids.clone()).collect();
    let actions: Vec<Vec<String>> = set.samples.iter().map(|s| s.actions.clone()).collect();
    let traces = set
        .samples
        .par_iter()
        .filter_map(|s| s.scenario.as_ref())
        .map(|s| run_scenario(s, &road, &cfg.policy, &cfg.sim))
        .collect::<Result<Vec<_>, _>>()
        .map_err(stage("simulation"))?;
    let trajectories = TrajectorySet::from_traces(&traces, cfg.analyze.dtw_stride);
    let report = metric_report(&tokens, &actions, &vocab.core_heads(&road), &trajectories, &road)
        .map_err(stage("metrics"))?;
    write_json(out, &report)?;
    let chart = sibling(out, "svg");
    plots::box_plot(&chart, "Pairwise DTW per NPC", "DTW distance (m)", &report.dtw)?;
    ctx.write_manifest("analyze", out, &[("samples", samples_path)], &[("metrics", out), ("chart", &chart)])
}

/// Output file names inside the pipeline directory.
pub struct PipelinePaths {
    pub weights: PathBuf,
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub samples: PathBuf,
    pub violations: PathBuf,
    pub metrics: PathBuf,
}

impl PipelinePaths {
    pub fn in_dir(dir: &Path) -> PipelinePaths {
        PipelinePaths {
            weights: dir.join("weights.json"),
            dataset: dir.join("seeds.json"),
            checkpoint: dir.join("model.json"),
            samples: dir.join("samples.json"),
            violations: dir.join("violations.json"),
            metrics: dir.join("metrics.json"),
        }
    }
}

/// Every stage in order, each consuming the previous stage's artifacts.
pub fn pipeline(ctx: &Context) -> Result<(), CliError> {
    let dir = &ctx.cfg.out_dir;
    let p = PipelinePaths::in_dir(dir);
    weigh(ctx, &p.weights)?;
    seed_data(ctx, Some(&p.weights), &p.dataset)?;
    train(ctx, &p.dataset, &p.checkpoint)?;
    generate(ctx, &p.checkpoint, &p.samples)?;
    test(ctx, &p.samples, Some(&p.weights), &p.violations)?;
    analyze(ctx, &p.samples, &p.metrics)?;
    let outputs: BTreeMap<&str, &Path> = [
        ("weights", p.weights.as_path()),
        ("dataset", &p.dataset),
        ("checkpoint", &p.checkpoint),
        ("samples", &p.samples),
        ("violations", &p.violations),
        ("metrics", &p.metrics),
    ]
    .into_iter()
    .collect();
    let list: Vec<(&str, &Path)> = outputs.into_iter().collect();
    ctx.write_manifest("pipeline", &dir.join("pipeline"), &[], &list)
}
