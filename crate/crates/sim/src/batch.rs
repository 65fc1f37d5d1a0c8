//! Batch scenario testing: simulate, monitor every applicable law, and collect
//! violations either once per law (coverage) or per scenario (counting).

use std::collections::{BTreeMap, BTreeSet};

use lawgen_core::reward::{score_scenario, RewardRecord, WeightedCorpus};
use lawgen_core::road::RoadStructure;
use lawgen_core::scenario::Scenario;
use lawgen_core::stl::MonitorOptions;
use lawgen_core::trace::Trace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EgoPolicy, SimConfig};
use crate::sim::{run_scenario, Termination, SIGNALS};
use crate::SimError;

pub const BATCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// A law leaves the working set after its first violation.
    Coverage,
    /// Every law is monitored on every scenario.
    Counting,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub monitor: MonitorOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub law_id: String,
    pub scenario_id: String,
    pub min_robustness: f64,
    pub attained_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    pub termination: Option<Termination>,
    pub duration: f64,
    pub r_overall: f64,
    pub attained_by: Option<String>,
    /// Set when the scenario could not be simulated or scored.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub road: String,
    pub laws: Vec<String>,
    pub violations: Vec<Violation>,
    /// Violations per law, including laws never violated.
    pub counts: BTreeMap<String, usize>,
    /// Working-set size after each scenario.
    pub working_set: Vec<usize>,
    pub scenarios: Vec<ScenarioResult>,
}

impl BatchReport {
    pub fn violated_laws(&self) -> BTreeSet<&str> {
        self.violations.iter().map(|v| v.law_id.as_str()).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ScenarioResult> {
        self.scenarios.iter().filter(|s| s.error.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Signals a run of `scenario` records.
pub fn recorded_signals(scenario: &Scenario) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = SIGNALS.iter().map(|s| s.to_string()).collect();
    for n in &scenario.npcs {
        for f in ["x", "y", "speed", "active"] {
            out.insert(format!("{}.{f}", n.id));
        }
    }
    out
}

/// Simulates `scenario` and scores it against the laws of `subset`.
pub fn simulate_and_score(
    id: &str,
    scenario: &Scenario,
    road: &RoadStructure,
    laws: &WeightedCorpus,
    subset: &[String],
    policy: &EgoPolicy,
    cfg: &SimConfig,
    opts: &MonitorOptions,
) -> Result<(Trace, RewardRecord), SimError> {
    let mut trace = run_scenario(scenario, road, policy, cfg)?;
    trace.meta.scenario_id = id.to_string();
    let record = score_scenario(&trace, laws, subset, opts)?;
    Ok((trace, record))
}

/// Runs every scenario and monitors the road's applicable laws.
///
/// Scenarios are simulated in parallel; bookkeeping happens afterwards in input
/// order, so the report does not depend on the thread count. A scenario that
/// fails is recorded and skipped.
pub fn test_batch(
    scenarios: &[(String, Scenario)],
    road: &RoadStructure,
    laws: &WeightedCorpus,
    policy: &EgoPolicy,
    cfg: &SimConfig,
    mode: Mode,
    opts: &BatchOptions,
) -> Result<BatchReport, SimError> {
    policy.validate()?;
    cfg.validate()?;
    let subset = laws.subset_for_road(road.tag.as_str());
    let mut needed = BTreeSet::new();
    for id in &subset {
        let law = laws.corpus().get(id).expect("subset ids come from the corpus");
        needed.extend(law.formula.referenced_signals());
        needed.extend(law.formula.parameters());
        if law.formula.has_distance_window() {
            needed.insert(opts.monitor.speed_signal.clone());
        }
    }
    let base: BTreeSet<String> = SIGNALS.iter().map(|s| s.to_string()).collect();
    let missing: Vec<String> = needed.difference(&base).cloned().collect();
    if !missing.is_empty() {
        return Err(SimError::MissingSignals(missing));
    }

    let run = |(id, s): &(String, Scenario)| {
        simulate_and_score(id, s, road, laws, &subset, policy, cfg, &opts.monitor)
            .map(|(trace, record)| (Termination::of(&trace), trace.duration(), record))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| scenarios.par_iter().map(run).collect());

    let mut working: Vec<String> = subset.clone();
    let mut report = BatchReport {
        schema_version: BATCH_SCHEMA_VERSION,
        mode,
        road: road.tag.as_str().to_string(),
        laws: subset.clone(),
        violations: Vec::new(),
        counts: subset.iter().map(|l| (l.clone(), 0)).collect(),
        working_set: Vec::with_capacity(scenarios.len()),
        scenarios: Vec::with_capacity(scenarios.len()),
    };
    for ((id, _), result) in scenarios.iter().zip(results) {
        match result {
            Ok((termination, duration, record)) => {
                for e in record.entries.iter().filter(|e| e.min_robustness < 0.0) {
                    if mode == Mode::Coverage && !working.contains(&e.law_id) {
                        continue;
                    }
                    report.violations.push(Violation {
                        law_id: e.law_id.clone(),
                        scenario_id: id.clone(),
                        min_robustness: e.min_robustness,
                        attained_at: e.attained_at,
                    });
                    *report.counts.get_mut(&e.law_id).expect("subset law") += 1;
                    if mode == Mode::Coverage {
                        working.retain(|l| l != &e.law_id);
                    }
                }
                report.scenarios.push(ScenarioResult {
                    scenario_id: id.clone(),
                    termination,
                    duration,
                    r_overall: record.r_overall,
                    attained_by: record.attained_by,
                    error: None,
                });
            }
            Err(e) => report.scenarios.push(ScenarioResult {
                scenario_id: id.clone(),
                termination: None,
                duration: 0.0,
                r_overall: 0.0,
                attained_by: None,
                error: Some(e.to_string()),
            }),
        }
        report.working_set.push(working.len());
    }
    Ok(report)
}
