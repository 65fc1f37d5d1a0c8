//! Scenario rewards: weighted law violations aggregated into one scalar.
//!
//! For each law the robustness signal is evaluated at every sample instant and
//! its minimum taken. The law's weighted score is `w * max(0, -min)` and the
//! scenario reward is the largest weighted score, attributed to the first law
//! (in subset order) that attains it. A compliant trace scores exactly zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{robustness_signal, EvalError, Formula, LawCorpus, LawSpec, MonitorOptions};
use crate::trace::Trace;
use crate::weighting::ScorerReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("law subset is empty")]
    EmptySubset,
    #[error("law `{0}` is not in the corpus")]
    UnknownLaw(String),
    #[error("law `{0}` has no weight")]
    MissingWeight(String),
    #[error("weight {weight} of law `{law}` is not a finite nonnegative number")]
    BadWeight { law: String, weight: f64 },
    #[error("law `{law}`: {source}")]
    Eval { law: String, source: EvalError },
}

/// A law corpus together with one risk weight per law.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCorpus {
    corpus: LawCorpus,
    weights: BTreeMap<String, f64>,
}

impl WeightedCorpus {
    pub fn new(corpus: LawCorpus, weights: BTreeMap<String, f64>) -> Result<WeightedCorpus, RewardError> {
        for l in corpus.laws() {
            let w = *weights.get(&l.id).ok_or_else(|| RewardError::MissingWeight(l.id.clone()))?;
            if !(w.is_finite() && w >= 0.0) {
                return Err(RewardError::BadWeight { law: l.id.clone(), weight: w });
            }
        }
        if let Some(extra) = weights.keys().find(|k| corpus.get(k).is_none()) {
            return Err(RewardError::UnknownLaw(extra.clone()));
        }
        Ok(WeightedCorpus { corpus, weights })
    }

    pub fn from_report(corpus: LawCorpus, report: &ScorerReport) -> Result<WeightedCorpus, RewardError> {
        WeightedCorpus::new(corpus, report.weights())
    }

    /// Every law weighted 1.
    pub fn uniform(corpus: LawCorpus) -> WeightedCorpus {
        let weights = corpus.ids().into_iter().map(|id| (id, 1.0)).collect();
        WeightedCorpus { corpus, weights }
    }

    pub fn corpus(&self) -> &LawCorpus {
        &self.corpus
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn weight(&self, id: &str) -> Option<f64> {
        self.weights.get(id).copied()
    }

    pub fn set_weight(&mut self, id: &str, weight: f64) -> Result<(), RewardError> {
        if self.corpus.get(id).is_none() {
            return Err(RewardError::UnknownLaw(id.to_string()));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(RewardError::BadWeight { law: id.to_string(), weight });
        }
        self.weights.insert(id.to_string(), weight);
        Ok(())
    }

    /// Ids of the laws applicable to a road structure, in corpus order.
    pub fn subset_for_road(&self, road: &str) -> Vec<String> {
        self.corpus.laws().iter().filter(|l| l.applies_to(road)).map(|l| l.id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawScore {
    pub law_id: String,
    /// Minimum robustness over all sample instants.
    pub min_robustness: f64,
    /// Time at which the law's condition is most violated (or least satisfied).
    pub attained_at: f64,
    pub weight: f64,
    /// `weight * max(0, -min_robustness)`.
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub scenario_id: String,
    pub entries: Vec<LawScore>,
    pub r_overall: f64,
    pub attained_by: Option<String>,
}

impl RewardRecord {
    pub fn entry(&self, law_id: &str) -> Option<&LawScore> {
        self.entries.iter().find(|e| e.law_id == law_id)
    }

    pub fn violated(&self) -> impl Iterator<Item = &LawScore> {
        self.entries.iter().filter(|e| e.min_robustness < 0.0)
    }
}

/// Per-instant obligation signal of an unbounded `G`, or a conjunction of them,
/// whose first minimum marks where the law is worst violated.
fn pointwise(f: &Formula, trace: &Trace, opts: &MonitorOptions) -> Result<Option<Vec<f64>>, EvalError> {
    match f {
        Formula::Always { window: None, body } => robustness_signal(body, trace, opts).map(Some),
        Formula::And(parts) => {
            let mut acc: Option<Vec<f64>> = None;
            for p in parts {
                let Some(sig) = pointwise(p, trace, opts)? else { return Ok(None) };
                acc = Some(match acc {
                    None => sig,
                    Some(a) => a.iter().zip(&sig).map(|(x, y)| x.min(*y)).collect(),
                });
            }
            Ok(acc)
        }
        _ => Ok(None),
    }
}

/// Minimum robustness of a law over the trace and the time it is attained.
///
/// For a top-level unbounded `G`, or a conjunction of them, the minimum equals
/// the minimum of the bodies, and their first argmin is reported since it
/// locates the offending instant.
pub fn law_extremum(law: &LawSpec, trace: &Trace, opts: &MonitorOptions) -> Result<(f64, f64), EvalError> {
    let sig = robustness_signal(&law.formula, trace, opts)?;
    let min = sig.iter().copied().fold(f64::INFINITY, f64::min);
    if sig.is_empty() {
        return Err(EvalError::EmptyWindow { t: 0.0 });
    }
    let locate = match pointwise(&law.formula, trace, opts)? {
        Some(p) => p,
        None => sig,
    };
    let idx = locate.iter().position(|&v| v == min).unwrap_or(0);
    Ok((min, trace.time_of(idx)))
}

/// Scores `trace` against the laws named in `subset`.
pub fn score_scenario(
    trace: &Trace,
    laws: &WeightedCorpus,
    subset: &[String],
    opts: &MonitorOptions,
) -> Result<RewardRecord, RewardError> {
    if subset.is_empty() {
        return Err(RewardError::EmptySubset);
    }
    let mut entries = Vec::with_capacity(subset.len());
    for id in subset {
        let law = laws.corpus.get(id).ok_or_else(|| RewardError::UnknownLaw(id.clone()))?;
        let weight = laws.weight(id).ok_or_else(|| RewardError::MissingWeight(id.clone()))?;
        let (min, at) =
            law_extremum(law, trace, opts).map_err(|source| RewardError::Eval { law: id.clone(), source })?;
        entries.push(LawScore {
            law_id: id.clone(),
            min_robustness: min,
            attained_at: at,
            weight,
            weighted: weight * (-min).max(0.0),
        });
    }
    let mut r_overall = 0.0;
    let mut attained_by = None;
    for e in &entries {
        if e.weighted > r_overall {
            r_overall = e.weighted;
            attained_by = Some(e.law_id.clone());
        }
    }
    Ok(RewardRecord { scenario_id: trace.meta.scenario_id.clone(), entries, r_overall, attained_by })
}
