//! Risk weights of laws from severity and occurrence scores.
//!
//! A scorer assigns each law a severity `S` and an occurrence `O` on a 0–4
//! scale; the weight is `S * O / 4`. Scorers are either a deterministic rule
//! table or a remote HTTP endpoint (typically fronting a language model).
//! Expert overrides are merged after scoring and take precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{LawCorpus, LawSpec};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SCORE_MAX: f64 = 4.0;
/// Environment variable that overrides the remote scorer's credential.
pub const TOKEN_ENV: &str = "LAWGEN_SCORER_TOKEN";
pub const OVERRIDE_SCORER_ID: &str = "expert-override";

pub const RUBRIC: &str = "Severity S (0.0-4.0): 0 no safety consequence, 1 minor inconvenience, \
2 property damage possible, 3 injury likely, 4 fatal outcome plausible. \
Occurrence O (0.0-4.0): 0 practically never observed, 1 rare, 2 occasional, 3 frequent, 4 ubiquitous. \
Reply with JSON {\"severity\": S, \"occurrence\": O, \"justification\": text}.";

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("score {0} outside [0, 4]")]
    OutOfRange(f64),
    #[error("rule table has no entry for law `{0}`")]
    Uncovered(String),
    #[error("scorer transport failure for law `{law}`: {message}")]
    Transport { law: String, message: String },
    #[error("reports cover different law sets: {0}")]
    MismatchedLaws(String),
    #[error("consistency needs at least two laws")]
    TooFewLaws,
    #[error("weights of one report are all equal; rank correlation is undefined")]
    ConstantWeights,
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

/// `S * O / 4`.
pub fn compute_weight(severity: f64, occurrence: f64) -> Result<f64, WeightError> {
    for v in [severity, occurrence] {
        if !(0.0..=SCORE_MAX).contains(&v) {
            return Err(WeightError::OutOfRange(v));
        }
    }
    Ok(severity * occurrence / 4.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub law_id: String,
    pub severity: f64,
    pub occurrence: f64,
    pub justification: String,
    pub scorer_id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A scorer reply that failed the syntactic or range checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub law_id: String,
    pub attempts: u32,
    pub syntactic_pass: bool,
    pub range_pass: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerReport {
    pub schema_version: u32,
    pub scorer_id: String,
    /// Accepted assessments in corpus order.
    pub assessments: Vec<RiskAssessment>,
    pub rejections: Vec<Rejection>,
    pub usage: Option<TokenUsage>,
}

impl ScorerReport {
    /// True when every law of the corpus has an accepted assessment.
    pub fn is_complete(&self) -> bool {
        self.rejections.is_empty()
    }

    pub fn weight(&self, law_id: &str) -> Option<f64> {
        self.assessments.iter().find(|a| a.law_id == law_id).map(|a| a.weight)
    }

    pub fn weights(&self) -> BTreeMap<String, f64> {
        self.assessments.iter().map(|a| (a.law_id.clone(), a.weight)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    pub fn from_json(text: &str) -> Result<ScorerReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<ScorerReport, WeightError> {
        let file_err = |message: String| WeightError::File { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        ScorerReport::from_json(&text).map_err(|e| file_err(e.to_string()))
    }
}

/// What a scorer returns for one law before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScore {
    pub severity: f64,
    pub occurrence: f64,
    pub justification: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreFailure {
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("law not covered")]
    Uncovered,
}

pub trait Scorer: Sync {
    fn id(&self) -> String;
    fn score(&self, law: &LawSpec) -> Result<RawScore, ScoreFailure>;
}

/// Deterministic scorer backed by a fixed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    #[serde(default = "default_table_id")]
    pub scorer_id: String,
    pub laws: BTreeMap<String, TableEntry>,
}

fn default_table_id() -> String {
    "rule-table".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub severity: f64,
    pub occurrence: f64,
    #[serde(default)]
    pub justification: String,
}

/// Bundled rule-table scores for the built-in law corpus.
pub const BUILTIN_WEIGHTS: &str = include_str!("../data/weights.toml");

impl RuleTable {
    pub fn builtin() -> RuleTable {
        RuleTable::from_toml_str(BUILTIN_WEIGHTS).expect("bundled rule table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<RuleTable, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<RuleTable, WeightError> {
        let file_err = |message: String| WeightError::File { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        RuleTable::from_toml_str(&text).map_err(|e| file_err(e.to_string()))
    }
}

impl Scorer for RuleTable {
    fn id(&self) -> String {
        self.scorer_id.clone()
    }

    fn score(&self, law: &LawSpec) -> Result<RawScore, ScoreFailure> {
        let e = self.laws.get(&law.id).ok_or(ScoreFailure::Uncovered)?;
        Ok(RawScore {
            severity: e.severity,
            occurrence: e.occurrence,
            justification: e.justification.clone(),
            usage: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpScorerConfig {
    pub endpoint: String,
    #[serde(default)]
    pub token: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    60
}

impl HttpScorerConfig {
    /// Applies the credential from [`TOKEN_ENV`] when set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(tok) = std::env::var(TOKEN_ENV) {
            if !tok.is_empty() {
                self.token = Some(tok);
            }
        }
        self
    }
}

#[derive(Debug, Serialize)]
pub struct ScoreRequest<'a> {
    pub law_id: &'a str,
    pub article: &'a str,
    pub formula: &'a str,
    pub description: &'a str,
    pub penalty: &'a str,
    pub rubric: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a str>,
}

/// Remote scorer: POSTs one JSON request per law and expects
/// `{"severity", "occurrence", "justification", "usage"?}` back.
pub struct HttpScorer {
    config: HttpScorerConfig,
    agent: ureq::Agent,
}

impl HttpScorer {
    pub fn new(config: HttpScorerConfig) -> HttpScorer {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpScorer { config, agent }
    }
}

/// Syntactic check of a scorer reply.
pub fn parse_score_response(body: &str) -> Result<RawScore, ScoreFailure> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| ScoreFailure::Malformed(e.to_string()))?;
    let num = |k: &str| {
        v.get(k).and_then(serde_json::Value::as_f64).ok_or_else(|| ScoreFailure::Malformed(format!("missing numeric `{k}`")))
    };
    let usage = v.get("usage").and_then(|u| serde_json::from_value::<TokenUsage>(u.clone()).ok());
    Ok(RawScore {
        severity: num("severity")?,
        occurrence: num("occurrence")?,
        justification: v.get("justification").and_then(serde_json::Value::as_str).unwrap_or_default().to_string(),
        usage,
    })
}

impl Scorer for HttpScorer {
    fn id(&self) -> String {
        match &self.config.model {
            Some(m) => format!("http:{m}"),
            None => format!("http:{}", self.config.endpoint),
        }
    }

    fn score(&self, law: &LawSpec) -> Result<RawScore, ScoreFailure> {
        let req = ScoreRequest {
            law_id: &law.id,
            article: &law.article,
            formula: &law.source,
            description: &law.description,
            penalty: &law.penalty,
            rubric: RUBRIC,
            model: self.config.model.as_deref(),
        };
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(tok) = &self.config.token {
            call = call.header("Authorization", format!("Bearer {tok}"));
        }
        let mut resp = call.send_json(&req).map_err(|e| ScoreFailure::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.body_mut().read_to_string().map_err(|e| ScoreFailure::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ScoreFailure::Transport(format!("HTTP {status}")));
        }
        parse_score_response(&body)
    }
}

enum Outcome {
    Accepted(RiskAssessment, Option<TokenUsage>),
    Rejected(Rejection),
}

fn score_law(scorer: &dyn Scorer, scorer_id: &str, law: &LawSpec) -> Result<Outcome, WeightError> {
    const ATTEMPTS: u32 = 2;
    let mut last_reason = String::new();
    let (mut syntactic, mut range) = (false, false);
    for attempt in 1..=ATTEMPTS {
        match scorer.score(law) {
            Ok(raw) => {
                syntactic = true;
                match compute_weight(raw.severity, raw.occurrence) {
                    Ok(weight) => {
                        let a = RiskAssessment {
                            law_id: law.id.clone(),
                            severity: raw.severity,
                            occurrence: raw.occurrence,
                            justification: raw.justification,
                            scorer_id: scorer_id.to_string(),
                            weight,
                        };
                        return Ok(Outcome::Accepted(a, raw.usage));
                    }
                    Err(e) => {
                        range = false;
                        last_reason = e.to_string();
                    }
                }
            }
            Err(ScoreFailure::Uncovered) => return Err(WeightError::Uncovered(law.id.clone())),
            Err(ScoreFailure::Transport(m)) if attempt == ATTEMPTS => {
                return Err(WeightError::Transport { law: law.id.clone(), message: m })
            }
            Err(ScoreFailure::Transport(m)) => last_reason = m,
            Err(ScoreFailure::Malformed(m)) => {
                syntactic = false;
                last_reason = m;
            }
        }
    }
    Ok(Outcome::Rejected(Rejection {
        law_id: law.id.clone(),
        attempts: ATTEMPTS,
        syntactic_pass: syntactic,
        range_pass: range,
        reason: last_reason,
    }))
}

/// Scores every law, fanning out one request per law and joining in corpus
/// order. Invalid replies are retried once and then recorded as rejections.
pub fn assess_corpus(corpus: &LawCorpus, scorer: &dyn Scorer) -> Result<ScorerReport, WeightError> {
    let scorer_id = scorer.id();
    let outcomes: Vec<Result<Outcome, WeightError>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            corpus.laws().iter().map(|law| s.spawn(|| score_law(scorer, &scorer_id, law))).collect();
        handles.into_iter().map(|h| h.join().expect("scorer thread panicked")).collect()
    });
    let mut report = ScorerReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scorer_id: scorer_id.clone(),
        assessments: Vec::new(),
        rejections: Vec::new(),
        usage: None,
    };
    for outcome in outcomes {
        match outcome? {
            Outcome::Accepted(a, usage) => {
                if let Some(u) = usage {
                    let total = report.usage.get_or_insert_with(TokenUsage::default);
                    total.prompt_tokens += u.prompt_tokens;
                    total.completion_tokens += u.completion_tokens;
                }
                report.assessments.push(a);
            }
            Outcome::Rejected(r) => report.rejections.push(r),
        }
    }
    Ok(report)
}

/// Expert-review overrides: law id → (S, O).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides(pub BTreeMap<String, TableEntry>);

impl Overrides {
    pub fn load(path: &Path) -> Result<Overrides, WeightError> {
        let file_err = |message: String| WeightError::File { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        toml::from_str(&text).map_err(|e| file_err(e.to_string()))
    }
}

/// Merges expert overrides into `report`. Overridden laws replace scorer
/// output (or fill in a rejection); laws outside `corpus` are rejected.
pub fn apply_overrides(report: &mut ScorerReport, corpus: &LawCorpus, overrides: &Overrides) -> Result<(), WeightError> {
    for (id, e) in &overrides.0 {
        if corpus.get(id).is_none() {
            return Err(WeightError::MismatchedLaws(format!("override for unknown law `{id}`")));
        }
        let a = RiskAssessment {
            law_id: id.clone(),
            severity: e.severity,
            occurrence: e.occurrence,
            justification: e.justification.clone(),
            scorer_id: OVERRIDE_SCORER_ID.into(),
            weight: compute_weight(e.severity, e.occurrence)?,
        };
        report.rejections.retain(|r| &r.law_id != id);
        match report.assessments.iter_mut().find(|x| &x.law_id == id) {
            Some(slot) => *slot = a,
            None => report.assessments.push(a),
        }
    }
    let order: BTreeMap<&str, usize> = corpus.laws().iter().enumerate().map(|(i, l)| (l.id.as_str(), i)).collect();
    report.assessments.sort_by_key(|a| order.get(a.law_id.as_str()).copied().unwrap_or(usize::MAX));
    Ok(())
}

/// Average (fractional) ranks, 1-based; ties share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub spearman: f64,
    pub mae: f64,
}

/// Spearman rank correlation (average ranks for ties) and mean absolute error
/// of the weights of two reports over the same laws.
pub fn consistency(a: &ScorerReport, b: &ScorerReport) -> Result<Consistency, WeightError> {
    let wa = a.weights();
    let wb = b.weights();
    if wa.keys().ne(wb.keys()) {
        let only_a: Vec<&String> = wa.keys().filter(|k| !wb.contains_key(*k)).collect();
        let only_b: Vec<&String> = wb.keys().filter(|k| !wa.contains_key(*k)).collect();
        return Err(WeightError::MismatchedLaws(format!("only in first: {only_a:?}, only in second: {only_b:?}")));
    }
    if wa.len() < 2 {
        return Err(WeightError::TooFewLaws);
    }
    let xa: Vec<f64> = wa.values().copied().collect();
    let xb: Vec<f64> = wb.values().copied().collect();
    let spearman = pearson(&average_ranks(&xa), &average_ranks(&xb)).ok_or(WeightError::ConstantWeights)?;
    let mae = xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).sum::<f64>() / xa.len() as f64;
    Ok(Consistency { spearman, mae })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::builtin_corpus;
    use proptest::prelude::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn one_law_corpus() -> LawCorpus {
        let c = builtin_corpus();
        LawCorpus::new(vec![c.get("law38_3").unwrap().clone()]).unwrap()
    }

    fn report(weights: &[(&str, f64)]) -> ScorerReport {
        ScorerReport {
            schema_version: REPORT_SCHEMA_VERSION,
            scorer_id: "t".into(),
            assessments: weights
                .iter()
                .map(|(id, w)| RiskAssessment {
                    law_id: id.to_string(),
                    severity: 0.0,
                    occurrence: 0.0,
                    justification: String::new(),
                    scorer_id: "t".into(),
                    weight: *w,
                })
                .collect(),
            rejections: vec![],
            usage: None,
        }
    }

    #[test]
    fn weight_formula() {
        assert_eq!(compute_weight(4.0, 4.0).unwrap(), 4.0);
        assert_eq!(compute_weight(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(compute_weight(3.0, 2.0).unwrap(), 1.5);
        assert!(compute_weight(4.1, 1.0).is_err());
        assert!(compute_weight(1.0, -0.1).is_err());
        assert!(compute_weight(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rule_table_single_law() {
        let table = RuleTable::from_toml_str("[laws.law38_3]\nseverity = 4\noccurrence = 3\n").unwrap();
        let r = assess_corpus(&one_law_corpus(), &table).unwrap();
        assert_eq!(r.assessments.len(), 1);
        assert_eq!(r.assessments[0].weight, 3.0);
        assert!(r.is_complete());
    }

    #[test]
    fn uncovered_law_is_an_error() {
        let table = RuleTable::from_toml_str("[laws.law45]\nseverity = 4\noccurrence = 3\n").unwrap();
        assert!(matches!(assess_corpus(&one_law_corpus(), &table), Err(WeightError::Uncovered(id)) if id == "law38_3"));
    }

    #[test]
    fn rule_scoring_is_deterministic() {
        let table = RuleTable::builtin();
        let a = assess_corpus(&builtin_corpus(), &table).unwrap();
        let b = assess_corpus(&builtin_corpus(), &table).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.assessments.len(), 10);
    }

    /// Serves `replies` in order, one connection each, and returns the port.
    fn serve(replies: Vec<String>) -> (u16, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let handle = std::thread::spawn(move || {
            let mut requests = Vec::new();
            for body in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                // Read headers, then the body (sized or chunked).
                loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    let text = String::from_utf8_lossy(&buf).to_string();
                    if let Some(end) = text.find("\r\n\r\n") {
                        let len = text
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        let chunked = text.to_ascii_lowercase().contains("transfer-encoding: chunked");
                        let done = if chunked { text.ends_with("0\r\n\r\n") } else { buf.len() >= end + 4 + len };
                        if done {
                            requests.push(text);
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let resp = format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
            requests
        });
        (port, handle)
    }

    #[test]
    fn remote_out_of_range_is_rejected_after_retry() {
        let bad = r#"{"severity": 5.1, "occurrence": 2, "justification": "x"}"#.to_string();
        let (port, server) = serve(vec![bad.clone(), bad]);
        let scorer = HttpScorer::new(HttpScorerConfig {
            endpoint: format!("http://127.0.0.1:{port}/score"),
            token: Some("secret".into()),
            model: Some("m".into()),
            timeout_secs: 10,
        });
        let r = assess_corpus(&one_law_corpus(), &scorer).unwrap();
        assert!(r.assessments.is_empty());
        assert_eq!(r.rejections.len(), 1);
        assert!(r.rejections[0].syntactic_pass && !r.rejections[0].range_pass);
        let requests = server.join().unwrap();
        assert_eq!(requests.len(), 2);
        assert!(requests[0].contains("Bearer secret"));
        let body: serde_json::Value = serde_json::from_str(requests[0].split("\r\n\r\n").nth(1).unwrap()).unwrap();
        assert_eq!(body["law_id"], "law38_3");
        assert_eq!(body["rubric"], RUBRIC);
        assert_eq!(body["penalty"], "Warning or fine.");
    }

    #[test]
    fn remote_retry_recovers() {
        let (port, server) = serve(vec![
            "not json".into(),
            r#"{"severity": 3, "occurrence": 2, "justification": "ok", "usage": {"prompt_tokens": 10, "completion_tokens": 4}}"#.into(),
        ]);
        let scorer = HttpScorer::new(HttpScorerConfig {
            endpoint: format!("http://127.0.0.1:{port}/"),
            token: None,
            model: None,
            timeout_secs: 10,
        });
        let r = assess_corpus(&one_law_corpus(), &scorer).unwrap();
        server.join().unwrap();
        assert_eq!(r.assessments[0].weight, 1.5);
        assert_eq!(r.usage, Some(TokenUsage { prompt_tokens: 10, completion_tokens: 4 }));
    }

    #[test]
    fn overrides_take_precedence() {
        let table = RuleTable::from_toml_str("[laws.law38_3]\nseverity = 4\noccurrence = 3\n").unwrap();
        let corpus = one_law_corpus();
        let mut r = assess_corpus(&corpus, &table).unwrap();
        let ov: Overrides = toml::from_str("[law38_3]\nseverity = 2\noccurrence = 2\n").unwrap();
        apply_overrides(&mut r, &corpus, &ov).unwrap();
        assert_eq!(r.assessments[0].weight, 1.0);
        assert_eq!(r.assessments[0].scorer_id, OVERRIDE_SCORER_ID);
        let bad: Overrides = toml::from_str("[nope]\nseverity = 2\noccurrence = 2\n").unwrap();
        assert!(apply_overrides(&mut r, &corpus, &bad).is_err());
    }

    #[test]
    fn consistency_examples() {
        let a = report(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        let c = consistency(&a, &a).unwrap();
        assert_eq!((c.spearman, c.mae), (1.0, 0.0));
        let rev = report(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        assert_eq!(consistency(&a, &rev).unwrap().spearman, -1.0);
        let other = report(&[("a", 1.0), ("b", 2.0), ("d", 3.0)]);
        assert!(matches!(consistency(&a, &other), Err(WeightError::MismatchedLaws(_))));
        assert!(matches!(consistency(&report(&[("a", 1.0)]), &report(&[("a", 1.0)])), Err(WeightError::TooFewLaws)));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn weight_is_monotone(s in 0.0f64..=4.0, o in 0.0f64..=4.0, ds in 0.0f64..=4.0, d_o in 0.0f64..=4.0) {
            let s2 = (s + ds).min(4.0);
            let o2 = (o + d_o).min(4.0);
            prop_assert!(compute_weight(s2, o).unwrap() >= compute_weight(s, o).unwrap());
            prop_assert!(compute_weight(s, o2).unwrap() >= compute_weight(s, o).unwrap());
        }

        #[test]
        fn consistency_is_symmetric(ws in prop::collection::vec((0u8..17, 0u8..17), 3..10)) {
            let ids: Vec<String> = (0..ws.len()).map(|i| format!("l{i}")).collect();
            let a = report(&ids.iter().zip(&ws).map(|(id, w)| (id.as_str(), w.0 as f64 / 4.0)).collect::<Vec<_>>());
            let b = report(&ids.iter().zip(&ws).map(|(id, w)| (id.as_str(), w.1 as f64 / 4.0)).collect::<Vec<_>>());
            match (consistency(&a, &b), consistency(&b, &a)) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }
    }
}
