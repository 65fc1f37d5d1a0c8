//! Sampled execution traces and their JSONL persistence.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

pub const TRACE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("signal `{signal}` has {found} samples, expected {expected}")]
    LengthMismatch { signal: String, expected: usize, found: usize },
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("time {t} outside [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> TraceError {
    TraceError::Schema { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalData {
    Numeric(Vec<f64>),
    /// Indices into `alphabet`.
    Categorical { alphabet: Vec<String>, values: Vec<u32> },
}

impl SignalData {
    pub fn len(&self) -> usize {
        match self {
            SignalData::Numeric(v) => v.len(),
            SignalData::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, SignalData::Numeric(_))
    }

    fn value(&self, i: usize) -> Value<'_> {
        match self {
            SignalData::Numeric(v) => Value::Real(v[i]),
            SignalData::Categorical { alphabet, values } => Value::Category(&alphabet[values[i] as usize]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Real(f64),
    Category(&'a str),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceMeta {
    pub scenario_id: String,
    pub seed: u64,
    /// Free-form annotations, e.g. the termination reason of a simulation.
    pub extra: BTreeMap<String, String>,
}

/// Fixed-step, sample-and-hold record of named signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    step: f64,
    len: usize,
    signals: BTreeMap<String, SignalData>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn new(step: f64, len: usize) -> Result<Trace, TraceError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(TraceError::Invalid(format!("time step must be positive, got {step}")));
        }
        if len == 0 {
            return Err(TraceError::Invalid("trace needs at least one sample".into()));
        }
        Ok(Trace { step, len, signals: BTreeMap::new(), meta: TraceMeta::default() })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn duration(&self) -> f64 {
        self.len as f64 * self.step
    }

    pub fn insert(&mut self, name: &str, data: SignalData) -> Result<(), TraceError> {
        if data.len() != self.len {
            return Err(TraceError::LengthMismatch { signal: name.into(), expected: self.len, found: data.len() });
        }
        match &data {
            SignalData::Numeric(v) => {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(TraceError::Invalid(format!("signal `{name}` sample {i} is not finite")));
                }
            }
            SignalData::Categorical { alphabet, values } => {
                if let Some(i) = values.iter().position(|&x| x as usize >= alphabet.len()) {
                    return Err(TraceError::Invalid(format!("signal `{name}` sample {i} outside its alphabet")));
                }
            }
        }
        self.signals.insert(name.to_string(), data);
        Ok(())
    }

    pub fn with_numeric(mut self, name: &str, values: Vec<f64>) -> Result<Trace, TraceError> {
        self.insert(name, SignalData::Numeric(values))?;
        Ok(self)
    }

    /// Adds a categorical signal given as labels; the alphabet is `alphabet`.
    pub fn with_categorical(mut self, name: &str, alphabet: &[&str], labels: &[&str]) -> Result<Trace, TraceError> {
        let values = labels
            .iter()
            .map(|l| {
                alphabet
                    .iter()
                    .position(|a| a == l)
                    .map(|p| p as u32)
                    .ok_or_else(|| TraceError::Invalid(format!("label `{l}` not in alphabet of `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let alphabet = alphabet.iter().map(|s| s.to_string()).collect();
        self.insert(name, SignalData::Categorical { alphabet, values })?;
        Ok(self)
    }

    pub fn signal(&self, name: &str) -> Option<&SignalData> {
        self.signals.get(name)
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        match self.signals.get(name) {
            Some(SignalData::Numeric(v)) => Some(v),
            _ => None,
        }
    }

    pub fn signals(&self) -> impl Iterator<Item = (&str, &SignalData)> {
        self.signals.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn has_signal(&self, name: &str) -> bool {
        self.signals.contains_key(name)
    }

    /// Sample index holding at time `t`; `t = duration` maps to the last sample.
    pub fn index_at(&self, t: f64) -> Result<usize, TraceError> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(TraceError::TimeOutOfRange { t, duration });
        }
        let idx = (t / self.step + 1e-9).floor() as usize;
        Ok(idx.min(self.len - 1))
    }

    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    pub fn value_at(&self, name: &str, t: f64) -> Result<Value<'_>, TraceError> {
        let data = self.signals.get(name).ok_or_else(|| TraceError::UnknownSignal(name.into()))?;
        Ok(data.value(self.index_at(t)?))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let decls: Vec<Json> = self
            .signals
            .iter()
            .map(|(name, data)| match data {
                SignalData::Numeric(_) => json!({"name": name, "kind": "numeric"}),
                SignalData::Categorical { alphabet, .. } => {
                    json!({"name": name, "kind": "categorical", "alphabet": alphabet})
                }
            })
            .collect();
        let header = json!({
            "schema_version": TRACE_SCHEMA_VERSION,
            "record": "header",
            "step": self.step,
            "duration": self.duration(),
            "samples": self.len,
            "scenario_id": self.meta.scenario_id,
            "seed": self.meta.seed,
            "meta": self.meta.extra,
            "signals": decls,
        });
        out.push_str(&header.to_string());
        out.push('\n');
        for i in 0..self.len {
            let mut sig = Map::new();
            for (name, data) in &self.signals {
                let v = match data.value(i) {
                    Value::Real(x) => json!(x),
                    Value::Category(c) => json!(c),
                };
                sig.insert(name.clone(), v);
            }
            out.push_str(&json!({"t_index": i, "signals": sig}).to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| schema("line 1", "empty trace file"))?;
        let header: Json = serde_json::from_str(first).map_err(|e| schema("line 1", e.to_string()))?;
        let hp = |field: &str| format!("line 1: header.{field}");

        if header.get("record").and_then(Json::as_str) != Some("header") {
            return Err(schema(hp("record"), "first record must be the header"));
        }
        match header.get("schema_version").and_then(Json::as_u64) {
            Some(v) if v == TRACE_SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(schema(hp("schema_version"), format!("unsupported version {v}"))),
            None => return Err(schema(hp("schema_version"), "missing")),
        }
        let step = header.get("step").and_then(Json::as_f64).ok_or_else(|| schema(hp("step"), "missing time step"))?;
        let duration =
            header.get("duration").and_then(Json::as_f64).ok_or_else(|| schema(hp("duration"), "missing duration"))?;
        if !(step > 0.0) {
            return Err(schema(hp("step"), "time step must be positive"));
        }
        let declared_len = (duration / step).round() as usize;

        let decls = header.get("signals").and_then(Json::as_array).ok_or_else(|| schema(hp("signals"), "missing"))?;
        enum Col {
            Num(Vec<f64>),
            Cat(Vec<String>, Vec<u32>),
        }
        let mut cols: Vec<(String, Col)> = Vec::new();
        for (k, d) in decls.iter().enumerate() {
            let p = |f: &str| format!("line 1: header.signals[{k}].{f}");
            let name = d.get("name").and_then(Json::as_str).ok_or_else(|| schema(p("name"), "missing"))?;
            let col = match d.get("kind").and_then(Json::as_str) {
                Some("numeric") => Col::Num(Vec::new()),
                Some("categorical") => {
                    let alpha = d
                        .get("alphabet")
                        .and_then(Json::as_array)
                        .ok_or_else(|| schema(p("alphabet"), "categorical signal needs an alphabet"))?
                        .iter()
                        .map(|a| a.as_str().map(str::to_string).ok_or_else(|| schema(p("alphabet"), "non-string label")))
                        .collect::<Result<Vec<_>, _>>()?;
                    Col::Cat(alpha, Vec::new())
                }
                other => return Err(schema(p("kind"), format!("expected numeric or categorical, got {other:?}"))),
            };
            cols.push((name.to_string(), col));
        }

        let mut count = 0usize;
        for (lineno, line) in lines {
            let path = |f: &str| format!("line {}: {f}", lineno + 1);
            let rec: Json = serde_json::from_str(line).map_err(|e| schema(path("record"), e.to_string()))?;
            let idx = rec.get("t_index").and_then(Json::as_u64).ok_or_else(|| schema(path("t_index"), "missing"))?;
            if idx as usize != count {
                return Err(schema(path("t_index"), format!("expected {count}, got {idx}")));
            }
            let sigs = rec.get("signals").and_then(Json::as_object).ok_or_else(|| schema(path("signals"), "missing"))?;
            for (name, col) in cols.iter_mut() {
                let Some(v) = sigs.get(name.as_str()) else {
                    continue;
                };
                let sp = path(&format!("signals.{name}"));
                match col {
                    Col::Num(xs) => xs.push(v.as_f64().ok_or_else(|| schema(sp, "expected a number"))?),
                    Col::Cat(alpha, xs) => {
                        let label = v.as_str().ok_or_else(|| schema(sp.clone(), "expected a label"))?;
                        let pos = alpha
                            .iter()
                            .position(|a| a == label)
                            .ok_or_else(|| schema(sp, format!("label `{label}` not in alphabet")))?;
                        xs.push(pos as u32);
                    }
                }
            }
            count += 1;
        }

        if count != declared_len {
            return Err(TraceError::LengthMismatch { signal: "<records>".into(), expected: declared_len, found: count });
        }
        let mut trace = Trace::new(step, count)?;
        for (name, col) in cols {
            let data = match col {
                Col::Num(xs) => SignalData::Numeric(xs),
                Col::Cat(alphabet, values) => SignalData::Categorical { alphabet, values },
            };
            trace.insert(&name, data)?;
        }
        trace.meta.scenario_id = header.get("scenario_id").and_then(Json::as_str).unwrap_or_default().to_string();
        trace.meta.seed = header.get("seed").and_then(Json::as_u64).unwrap_or_default();
        if let Some(extra) = header.get("meta").and_then(Json::as_object) {
            for (k, v) in extra {
                let v = v.as_str().ok_or_else(|| schema(hp(&format!("meta.{k}")), "expected a string"))?;
                trace.meta.extra.insert(k.clone(), v.to_string());
            }
        }
        Ok(trace)
    }

    pub fn store(&self, path: &Path) -> Result<(), TraceError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_jsonl().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Trace, TraceError> {
        let mut text = String::new();
        for line in BufReader::new(File::open(path)?).lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        Trace::from_jsonl(&text)
    }
}
