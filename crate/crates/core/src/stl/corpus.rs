//! Law corpora: formalized traffic-law clauses loaded from TOML.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::Formula;
use super::parser::{parse_formula, ParseError};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("law `{id}`: {source}")]
    Formula { id: String, source: ParseError },
    #[error("duplicate law id `{0}`")]
    DuplicateId(String),
    #[error("unsupported corpus schema version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawLaw {
    id: String,
    article: String,
    description: String,
    formula: String,
    #[serde(default)]
    penalty: String,
    #[serde(default)]
    roads: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCorpus {
    schema_version: u32,
    #[serde(rename = "law")]
    laws: Vec<RawLaw>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawSpec {
    pub id: String,
    pub article: String,
    pub description: String,
    pub source: String,
    pub formula: Formula,
    /// Statutory penalty text, forwarded to risk scorers as grounding.
    pub penalty: String,
    /// Road structures the clause applies to; empty means all.
    pub roads: Vec<String>,
}

impl LawSpec {
    pub fn applies_to(&self, road: &str) -> bool {
        self.roads.is_empty() || self.roads.iter().any(|r| r == road)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LawCorpus {
    laws: Vec<LawSpec>,
}

impl LawCorpus {
    pub fn new(laws: Vec<LawSpec>) -> Result<LawCorpus, CorpusError> {
        let mut seen = HashSet::new();
        for l in &laws {
            if !seen.insert(l.id.clone()) {
                return Err(CorpusError::DuplicateId(l.id.clone()));
            }
        }
        Ok(LawCorpus { laws })
    }

    pub fn from_toml_str(text: &str) -> Result<LawCorpus, CorpusError> {
        let raw: RawCorpus = toml::from_str(text)?;
        if raw.schema_version != CORPUS_SCHEMA_VERSION {
            return Err(CorpusError::Version(raw.schema_version));
        }
        let laws = raw
            .laws
            .into_iter()
            .map(|r| {
                let formula =
                    parse_formula(&r.formula).map_err(|source| CorpusError::Formula { id: r.id.clone(), source })?;
                Ok(LawSpec {
                    id: r.id,
                    article: r.article,
                    description: r.description,
                    source: r.formula.trim().to_string(),
                    formula,
                    penalty: r.penalty,
                    roads: r.roads,
                })
            })
            .collect::<Result<Vec<_>, CorpusError>>()?;
        LawCorpus::new(laws)
    }

    pub fn load(path: &Path) -> Result<LawCorpus, CorpusError> {
        LawCorpus::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn laws(&self) -> &[LawSpec] {
        &self.laws
    }

    pub fn get(&self, id: &str) -> Option<&LawSpec> {
        self.laws.iter().find(|l| l.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.laws.iter().map(|l| l.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    /// Union of the signals every law needs from a trace, including distance
    /// budgets and, if any law has a distance window, the speed signal.
    pub fn required_signals(&self, speed_signal: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for l in &self.laws {
            out.extend(l.formula.referenced_signals());
            out.extend(l.formula.parameters());
            if l.formula.has_distance_window() {
                out.insert(speed_signal.to_string());
            }
        }
        out
    }
}

/// The bundled ten-clause corpus.
pub fn builtin_corpus() -> LawCorpus {
    LawCorpus::from_toml_str(BUILTIN_LAWS).expect("bundled law corpus is valid")
}

pub const BUILTIN_LAWS: &str = include_str!("../../data/laws.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses_with_unique_ids() {
        let c = builtin_corpus();
        assert_eq!(c.len(), 10);
        assert!(c.get("law38_3").is_some());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"
schema_version = 1
[[law]]
id = "a"
article = "1"
description = "d"
formula = "x > 1"
[[law]]
id = "a"
article = "2"
description = "d"
formula = "x > 2"
"#;
        assert!(matches!(LawCorpus::from_toml_str(text), Err(CorpusError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn bad_formula_names_the_law() {
        let text = "schema_version = 1\n[[law]]\nid = \"b\"\narticle = \"1\"\ndescription = \"d\"\nformula = \"G (x >\"\n";
        match LawCorpus::from_toml_str(text) {
            Err(CorpusError::Formula { id, .. }) => assert_eq!(id, "b"),
            other => panic!("{other:?}"),
        }
    }
}
