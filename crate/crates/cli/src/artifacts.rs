//! On-disk artifact formats and their readers and writers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lawgen_core::road::RoadTag;
use lawgen_core::scenario::Scenario;
use lawgen_generator::ProxyReport;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{input, stage, CliError};

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

/// Token encoding of a scenario batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedBatch {
    pub schema_version: u32,
    pub vocab_hash: String,
    pub records: Vec<EncodedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedRecord {
    pub id: String,
    pub actions: Vec<String>,
    pub ids: Vec<u32>,
}

/// Seed corpus: sampled scenarios with their simulated reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub road: RoadTag,
    pub vocab_hash: String,
    pub records: Vec<DatasetRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub scenario: Scenario,
    pub ids: Vec<u32>,
    pub reward: f64,
    pub attained_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub schema_version: u32,
    pub dataset: String,
    pub model: serde_json::Value,
    pub train: serde_json::Value,
    pub proxy: serde_json::Value,
    pub proxy_report: ProxyReport,
    /// Mean loss per epoch.
    pub loss_curve: Vec<f64>,
    pub steps: u64,
    pub log_z: f64,
    pub skipped: usize,
}

/// Generated token sequences and what they decode to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub schema_version: u32,
    pub road: RoadTag,
    pub vocab_hash: String,
    pub temperature: f64,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub ids: Vec<u32>,
    pub actions: Vec<String>,
    /// Sampling stopped at end-of-sequence rather than the length limit.
    pub finished: bool,
    /// Every required field is present.
    pub complete: bool,
    /// The decoded scenario passes every road constraint.
    pub scenario: Option<Scenario>,
    pub proxy_reward: Option<f64>,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(input(path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(input(path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(stage(dir.display()))?;
    }
    std::fs::write(path, text).map_err(stage(path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_text(path, &text)
}

/// `dir/name.json` → `dir/name.<ext>`.
pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

pub fn manifest_path(output: &Path) -> PathBuf {
    sibling(output, "manifest.json")
}

/// Reads scenarios from a directory of scenario files, a single scenario
/// file, a seed dataset or a generated sample set (valid samples only).
pub fn load_scenarios(path: &Path) -> Result<Vec<(String, Scenario)>, CliError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(input(path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        return files
            .iter()
            .map(|f| {
                let s = Scenario::from_json(&read_text(f)?).map_err(input(f.display()))?;
                Ok((stem(f), s))
            })
            .collect();
    }
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(input(path.display()))?;
    if value.get("records").is_some() {
        let d: Dataset = serde_json::from_value(value).map_err(input(path.display()))?;
        Ok(d.records.into_iter().map(|r| (r.id, r.scenario)).collect())
    } else if value.get("samples").is_some() {
        let s: SampleSet = serde_json::from_value(value).map_err(input(path.display()))?;
        Ok(s.samples.into_iter().filter_map(|r| r.scenario.map(|sc| (r.id, sc))).collect())
    } else {
        let s = Scenario::from_json(&text).map_err(input(path.display()))?;
        Ok(vec![(stem(path), s)])
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
