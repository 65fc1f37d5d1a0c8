//! Declarative run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use lawgen_core::road::RoadTag;
use lawgen_core::weighting::HttpScorerConfig;
use lawgen_generator::{ModelConfig, ProxyConfig, TrainConfig};
use lawgen_sim::{EgoPolicy, Mode, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; stage seeds are derived from it.
    pub seed: u64,
    pub road: RoadTag,
    /// Worker threads for simulation, sampling and metrics; 0 uses every core.
    pub threads: usize,
    /// Output directory of `pipeline`.
    pub out_dir: PathBuf,
    /// Law corpus file; the bundled corpus when absent.
    pub laws: Option<PathBuf>,
    pub weigh: WeighConfig,
    pub seed_data: SeedDataConfig,
    pub model: ModelShape,
    pub train: TrainConfig,
    pub proxy: ProxyConfig,
    pub generate: GenerateConfig,
    pub sim: SimConfig,
    pub policy: EgoPolicy,
    pub test: TestConfig,
    pub analyze: AnalyzeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            road: RoadTag::S3,
            threads: 0,
            out_dir: PathBuf::from("out"),
            laws: None,
            weigh: WeighConfig::default(),
            seed_data: SeedDataConfig::default(),
            model: ModelShape::default(),
            train: TrainConfig::default(),
            proxy: ProxyConfig::default(),
            generate: GenerateConfig::default(),
            sim: SimConfig::default(),
            policy: EgoPolicy::default(),
            test: TestConfig::default(),
            analyze: AnalyzeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    /// Fixed severity/occurrence table.
    #[default]
    Table,
    /// Remote scoring endpoint.
    Http,
    /// Every law weighted 1.
    Uniform,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeighConfig {
    pub scorer: ScorerKind,
    /// Rule table for the `table` scorer; the bundled table when absent.
    pub table: Option<PathBuf>,
    /// Expert overrides merged after scoring.
    pub overrides: Option<PathBuf>,
    pub http: Option<HttpScorerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedDataConfig {
    pub count: usize,
}

impl Default for SeedDataConfig {
    fn default() -> Self {
        SeedDataConfig { count: 2048 }
    }
}

/// Transformer shape; the vocabulary size is fixed by the token vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelShape {
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub d_ff: usize,
    pub context: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        let d = ModelConfig::desk(0);
        ModelShape { d_model: d.d_model, heads: d.heads, layers: d.layers, d_ff: d.d_ff, context: d.context }
    }
}

impl ModelShape {
    pub fn with_vocab(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            d_model: self.d_model,
            heads: self.heads,
            layers: self.layers,
            d_ff: self.d_ff,
            context: self.context,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub count: usize,
    pub temperature: f64,
    /// Maximum tokens per sample; the model context bounds it as well.
    pub max_len: usize,
    /// Draw `count · rerank` samples and keep the `count` best by proxy reward.
    pub rerank: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig { count: 256, temperature: 1.0, max_len: 127, rerank: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub mode: Mode,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { mode: Mode::Counting }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Keep every n-th trajectory sample for DTW.
    pub dtw_stride: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig { dtw_stride: 10 }
    }
}

/// Per-stage seeds, fixed functions of the master seed.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    // FNV-1a over the stage name, mixed with the master seed.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in stage.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ master.wrapping_mul(0x9E3779B97F4A7C15)
}

impl RunConfig {
    /// Reads a TOML file. Relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.out_dir);
        for p in [&mut cfg.laws, &mut cfg.weigh.table, &mut cfg.weigh.overrides].into_iter().flatten() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<RunConfig, CliError> {
        match path {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }

    /// Fills derived fields and checks ranges.
    pub fn resolve(mut self) -> Result<RunConfig, CliError> {
        self.train.seed = stage_seed(self.seed, "train");
        self.proxy.seed = stage_seed(self.seed, "proxy");
        self.sim.seed = self.seed;
        let bad = |m: String| Err(CliError::Config(m));
        if self.seed_data.count == 0 {
            return bad("seed_data.count must be positive".into());
        }
        if self.generate.count == 0 || self.generate.rerank == 0 || self.generate.max_len == 0 {
            return bad("generate.count, generate.rerank and generate.max_len must be positive".into());
        }
        if !(self.generate.temperature > 0.0 && self.generate.temperature.is_finite()) {
            return bad(format!("generate.temperature must be positive, got {}", self.generate.temperature));
        }
        if self.analyze.dtw_stride == 0 {
            return bad("analyze.dtw_stride must be positive".into());
        }
        if self.weigh.scorer == ScorerKind::Http && self.weigh.http.is_none() {
            return bad("weigh.scorer = \"http\" needs a [weigh.http] section".into());
        }
        if self.weigh.http.as_ref().is_some_and(|h| h.token.is_some()) {
            return bad(format!("scorer credentials are read from {} only", lawgen_core::weighting::TOKEN_ENV));
        }
        self.model.with_vocab(2).validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.sim.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.policy.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(self)
    }

    /// Snapshot recorded in manifests.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
