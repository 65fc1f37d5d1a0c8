//! Finite token vocabulary for the sequence generator.
//!
//! An action unit is split into a *head* token naming the field (for example
//! `ego+speed` or `npc2+lane5`) followed by one value token per numeric
//! argument. Numeric values are quantized into fixed-width bins; a bin is
//! represented by its lower edge, so detokenizing returns `floor(v / w) * w`.
//!
//! | value kind  | range        | bin width |
//! |-------------|--------------|-----------|
//! | hour        | 0..=23       | 1         |
//! | minute      | 0..=59       | 1         |
//! | intensity   | [0, 1]       | 0.05      |
//! | speed       | [0, 20] m/s  | 0.5       |
//! | offset      | [0, 80] m    | 0.5       |
//! | time        | [0, 60] s    | 0.5       |

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::codec::Action;
use super::model::{WeatherKind, MAX_NPCS};
use crate::road::{LightProgram, RoadStructure};

pub const VOCAB_SCHEMA_VERSION: u32 = 1;
pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
/// Lane ids `lane1..laneN` covered by the vocabulary (the largest road has 8).
pub const MAX_LANES: usize = 8;
const CROSSWALKS: [&str; 4] = ["cwN", "cwE", "cwS", "cwW"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Hour,
    Minute,
    Intensity,
    Speed,
    Offset,
    Time,
}

impl ValueKind {
    pub const ALL: [ValueKind; 6] =
        [ValueKind::Hour, ValueKind::Minute, ValueKind::Intensity, ValueKind::Speed, ValueKind::Offset, ValueKind::Time];

    pub fn bins(self) -> Bins {
        match self {
            ValueKind::Hour => Bins { per_unit: 1, max: 23.0 },
            ValueKind::Minute => Bins { per_unit: 1, max: 59.0 },
            ValueKind::Intensity => Bins { per_unit: 20, max: 1.0 },
            ValueKind::Speed => Bins { per_unit: 2, max: 20.0 },
            ValueKind::Offset => Bins { per_unit: 2, max: 80.0 },
            ValueKind::Time => Bins { per_unit: 2, max: 60.0 },
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            ValueKind::Hour => "hour",
            ValueKind::Minute => "minute",
            ValueKind::Intensity => "int",
            ValueKind::Speed => "speed",
            ValueKind::Offset => "offset",
            ValueKind::Time => "time",
        }
    }
}

/// Fixed-width bins over `[0, max]` with width `1 / per_unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub per_unit: u32,
    pub max: f64,
}

impl Bins {
    pub fn width(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    pub fn count(&self) -> usize {
        (self.max * self.per_unit as f64).round() as usize + 1
    }

    pub fn index(&self, v: f64) -> Option<usize> {
        if !(v.is_finite() && (0.0..=self.max).contains(&v)) {
            return None;
        }
        Some(((v * self.per_unit as f64 + 1e-9).floor() as usize).min(self.count() - 1))
    }

    pub fn value(&self, index: usize) -> f64 {
        index as f64 / self.per_unit as f64
    }

    pub fn quantize(&self, v: f64) -> Option<f64> {
        self.index(v).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VocabError {
    #[error("`{token}`: {kind:?} value {value} outside [0, {max}]")]
    OutOfRange { token: String, kind: ValueKind, value: f64, max: f64 },
    #[error("`{0}` is not a valid action token")]
    Unparseable(String),
    #[error("`{0}` has no vocabulary entry")]
    NotInVocabulary(String),
    #[error("id {0} outside the vocabulary")]
    UnknownId(u32),
    #[error("malformed id sequence at position {0}")]
    Malformed(usize),
    #[error("vocabulary hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub name: String,
    pub args: Vec<ValueKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Entry {
    Special { name: String },
    Head(Head),
    Value { kind: ValueKind, bin: usize },
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<Entry>,
    heads: HashMap<String, u32>,
    value_base: HashMap<ValueKind, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    schema_version: u32,
    bins: Vec<(ValueKind, Bins)>,
    entries: Vec<Entry>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::standard()
    }
}

impl Vocabulary {
    /// The vocabulary covering every road structure.
    pub fn standard() -> Vocabulary {
        let mut entries = vec![
            Entry::Special { name: "<pad>".into() },
            Entry::Special { name: "<bos>".into() },
            Entry::Special { name: "<eos>".into() },
        ];
        let mut head = |name: String, args: &[ValueKind]| entries.push(Entry::Head(Head { name, args: args.to_vec() }));
        use ValueKind::*;
        let lanes: Vec<String> = (1..=MAX_LANES).map(|k| format!("lane{k}")).collect();
        head("time".into(), &[Hour, Minute]);
        for w in WeatherKind::ALL {
            head(format!("weather+{}", w.as_str()), &[Intensity]);
        }
        for l in &lanes {
            head(format!("ego+{l}"), &[Offset]);
        }
        head("ego+speed".into(), &[Speed]);
        for l in &lanes {
            head(format!("ego+dest+{l}"), &[]);
        }
        for l in &lanes {
            head(format!("light+{l}"), &[Time, Time, Time, Time]);
        }
        for c in CROSSWALKS {
            head(format!("peds+{c}"), &[Time, Time]);
        }
        for k in 1..=MAX_NPCS {
            let n = format!("npc{k}");
            for l in &lanes {
                head(format!("{n}+{l}"), &[Offset]);
            }
            head(format!("{n}+speed"), &[Speed]);
            head(format!("{n}+at"), &[Time]);
            for l in &lanes {
                head(format!("{n}+goto+{l}"), &[]);
            }
        }
        for kind in ValueKind::ALL {
            for bin in 0..kind.bins().count() {
                entries.push(Entry::Value { kind, bin });
            }
        }
        Vocabulary::from_entries(entries)
    }

    fn from_entries(entries: Vec<Entry>) -> Vocabulary {
        let mut heads = HashMap::new();
        let mut value_base = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            match e {
                Entry::Head(h) => {
                    heads.insert(h.name.clone(), i as u32);
                }
                Entry::Value { kind, bin: 0 } => {
                    value_base.insert(*kind, i as u32);
                }
                _ => {}
            }
        }
        Vocabulary { entries, heads, value_base }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: u32) -> Option<&Entry> {
        self.entries.get(id as usize)
    }

    pub fn head_id(&self, name: &str) -> Option<u32> {
        self.heads.get(name).copied()
    }

    pub fn value_id(&self, kind: ValueKind, bin: usize) -> u32 {
        self.value_base[&kind] + bin as u32
    }

    /// Human-readable label of an id.
    pub fn label(&self, id: u32) -> String {
        match self.entry(id) {
            Some(Entry::Special { name }) => name.clone(),
            Some(Entry::Head(h)) => h.name.clone(),
            Some(Entry::Value { kind, bin }) => format!("{}:{}", kind.prefix(), kind.bins().value(*bin)),
            None => format!("<{id}?>"),
        }
    }

    /// Head ids whose lanes exist on `road` (the core vocabulary for coverage).
    pub fn core_heads(&self, road: &RoadStructure) -> Vec<u32> {
        let lane_ok = |name: &str| {
            name.split('+').filter(|p| p.starts_with("lane")).all(|p| road.lane(p).is_some())
                && name.split('+').filter(|p| p.starts_with("cw")).all(|p| road.crosswalk(p).is_some())
                && (!name.starts_with("light+") || name.split('+').nth(1).and_then(|l| road.lane(l)).is_some_and(|l| l.signalized))
        };
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match e {
                Entry::Head(h) if lane_ok(&h.name) => Some(i as u32),
                _ => None,
            })
            .collect()
    }

    fn split(action: &Action) -> (String, Vec<f64>) {
        match action {
            Action::Time { hour, minute } => ("time".into(), vec![*hour as f64, *minute as f64]),
            Action::Weather { kind, value } => (format!("weather+{}", kind.as_str()), vec![*value]),
            Action::EgoLane { lane, offset } => (format!("ego+{lane}"), vec![*offset]),
            Action::EgoSpeed(v) => ("ego+speed".into(), vec![*v]),
            Action::EgoDest(l) => (format!("ego+dest+{l}"), vec![]),
            Action::Light { lane, program: p } => (format!("light+{lane}"), vec![p.green, p.yellow, p.red, p.offset]),
            Action::Peds { crosswalk, start, end } => (format!("peds+{crosswalk}"), vec![*start, *end]),
            Action::NpcLane { npc, lane, offset } => (format!("{npc}+{lane}"), vec![*offset]),
            Action::NpcSpeed { npc, speed } => (format!("{npc}+speed"), vec![*speed]),
            Action::NpcAt { npc, at } => (format!("{npc}+at"), vec![*at]),
            Action::NpcGoto { npc, lane } => (format!("{npc}+goto+{lane}"), vec![]),
        }
    }

    /// Ids of one action unit: head followed by its value bins.
    pub fn encode_action(&self, token: &str) -> Result<Vec<u32>, VocabError> {
        let action = Action::parse(token).ok_or_else(|| VocabError::Unparseable(token.to_string()))?;
        let (head, values) = Vocabulary::split(&action);
        let hid = self.head_id(&head).ok_or_else(|| VocabError::NotInVocabulary(token.to_string()))?;
        let Some(Entry::Head(h)) = self.entry(hid) else { unreachable!("head ids index heads") };
        let mut out = vec![hid];
        for (kind, v) in h.args.iter().zip(values) {
            let bins = kind.bins();
            let bin = bins.index(v).ok_or_else(|| VocabError::OutOfRange {
                token: token.to_string(),
                kind: *kind,
                value: v,
                max: bins.max,
            })?;
            out.push(self.value_id(*kind, bin));
        }
        Ok(out)
    }

    /// Token ids of an action sequence (without BOS/EOS).
    pub fn tokenize<S: AsRef<str>>(&self, sequence: &[S]) -> Result<Vec<u32>, VocabError> {
        let mut out = Vec::new();
        for t in sequence {
            out.extend(self.encode_action(t.as_ref())?);
        }
        Ok(out)
    }

    /// Action sequence of an id stream. BOS is skipped, EOS and PAD end the
    /// stream. Each head must be followed by exactly its value tokens.
    pub fn detokenize(&self, ids: &[u32]) -> Result<Vec<String>, VocabError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < ids.len() {
            let id = ids[i];
            match self.entry(id).ok_or(VocabError::UnknownId(id))? {
                Entry::Special { .. } if id == BOS => {
                    i += 1;
                    continue;
                }
                Entry::Special { .. } => break,
                Entry::Value { .. } => return Err(VocabError::Malformed(i)),
                Entry::Head(h) => {
                    let mut vals = Vec::with_capacity(h.args.len());
                    for (k, kind) in h.args.iter().enumerate() {
                        let pos = i + 1 + k;
                        match ids.get(pos).and_then(|&v| self.entry(v)) {
                            Some(Entry::Value { kind: vk, bin }) if vk == kind => vals.push(kind.bins().value(*bin)),
                            _ => return Err(VocabError::Malformed(pos)),
                        }
                    }
                    out.push(render(&h.name, &vals));
                    i += 1 + h.args.len();
                }
            }
        }
        Ok(out)
    }

    /// Quantizes every value of an action sequence (detokenize ∘ tokenize).
    pub fn quantize<S: AsRef<str>>(&self, sequence: &[S]) -> Result<Vec<String>, VocabError> {
        self.detokenize(&self.tokenize(sequence)?)
    }

    /// Which value kind (if any) may follow `prefix` next, given a well-formed
    /// prefix of ids; `None` means a head, EOS or nothing is expected.
    pub fn expected_value(&self, prefix: &[u32]) -> Option<ValueKind> {
        let mut i = 0;
        let mut pending: Option<(&Head, usize)> = None;
        while i < prefix.len() {
            if let Some((h, k)) = pending {
                if k < h.args.len() {
                    pending = Some((h, k + 1));
                    i += 1;
                    continue;
                }
                pending = None;
            }
            if let Some(Entry::Head(h)) = self.entry(prefix[i]) {
                pending = Some((h, 0));
            }
            i += 1;
        }
        pending.and_then(|(h, k)| h.args.get(k).copied())
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            schema_version: VOCAB_SCHEMA_VERSION,
            bins: ValueKind::ALL.iter().map(|k| (*k, k.bins())).collect(),
            entries: self.entries.clone(),
        };
        serde_json::to_string(&file).expect("vocabulary serialises")
    }

    pub fn from_json(text: &str) -> Result<Vocabulary, serde_json::Error> {
        let file: VocabFile = serde_json::from_str(text)?;
        Ok(Vocabulary::from_entries(file.entries))
    }

    /// Hex SHA-256 of the canonical JSON form; checkpoints record it.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

fn render(head: &str, vals: &[f64]) -> String {
    let mut s = head.to_string();
    if head == "time" {
        // Hour and minute are integers in the action grammar.
        return format!("time+{}+{}", vals[0] as u32, vals[1] as u32);
    }
    for v in vals {
        s.push('+');
        s.push_str(&v.to_string());
    }
    s
}

/// Light program represented by quantized values (used by samplers).
pub fn quantize_program(p: &LightProgram) -> Option<LightProgram> {
    let b = ValueKind::Time.bins();
    Some(LightProgram { green: b.quantize(p.green)?, yellow: b.quantize(p.yellow)?, red: b.quantize(p.red)?, offset: b.quantize(p.offset)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::RoadTag;
    use proptest::prelude::*;

    #[test]
    fn bin_arithmetic() {
        let v = Vocabulary::standard();
        let ids = v.encode_action("ego+speed+5.3").unwrap();
        assert_eq!(ids, vec![v.head_id("ego+speed").unwrap(), v.value_id(ValueKind::Speed, 10)]);
        let ids = v.encode_action("weather+rain+0.23").unwrap();
        assert_eq!(ids[1], v.value_id(ValueKind::Intensity, 4));
        assert!(matches!(v.encode_action("ego+speed+99"), Err(VocabError::OutOfRange { .. })));
        assert_eq!(v.detokenize(&v.encode_action("ego+speed+5.3").unwrap()).unwrap(), ["ego+speed+5"]);
        assert_eq!(v.detokenize(&v.encode_action("weather+rain+0.23").unwrap()).unwrap(), ["weather+rain+0.2"]);
    }

    #[test]
    fn ids_are_dense_and_specials_distinct() {
        let v = Vocabulary::standard();
        assert!(matches!(v.entry(PAD), Some(Entry::Special { .. })));
        assert!(matches!(v.entry(BOS), Some(Entry::Special { .. })));
        assert!(matches!(v.entry(EOS), Some(Entry::Special { .. })));
        assert_eq!(v.entry(v.len() as u32), None);
        let labels: std::collections::HashSet<String> = (0..v.len() as u32).map(|i| v.label(i)).collect();
        assert_eq!(labels.len(), v.len());
    }

    #[test]
    fn json_and_hash_are_stable() {
        let v = Vocabulary::standard();
        let back = Vocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(back.hash(), v.hash());
        assert_eq!(back.len(), v.len());
    }

    #[test]
    fn malformed_id_streams() {
        let v = Vocabulary::standard();
        let speed = v.value_id(ValueKind::Speed, 3);
        let head = v.head_id("ego+speed").unwrap();
        assert!(matches!(v.detokenize(&[speed]), Err(VocabError::Malformed(0))));
        assert!(matches!(v.detokenize(&[head]), Err(VocabError::Malformed(1))));
        let off = v.value_id(ValueKind::Offset, 3);
        assert!(matches!(v.detokenize(&[head, off]), Err(VocabError::Malformed(1))));
        assert_eq!(v.detokenize(&[BOS, head, speed, EOS, head]).unwrap(), ["ego+speed+1.5"]);
    }

    #[test]
    fn expected_value_tracks_arguments() {
        let v = Vocabulary::standard();
        let time = v.head_id("time").unwrap();
        assert_eq!(v.expected_value(&[BOS]), None);
        assert_eq!(v.expected_value(&[BOS, time]), Some(ValueKind::Hour));
        assert_eq!(v.expected_value(&[BOS, time, v.value_id(ValueKind::Hour, 3)]), Some(ValueKind::Minute));
        let full = [BOS, time, v.value_id(ValueKind::Hour, 3), v.value_id(ValueKind::Minute, 2)];
        assert_eq!(v.expected_value(&full), None);
    }

    #[test]
    fn core_heads_respect_road() {
        let v = Vocabulary::standard();
        let s4 = RoadStructure::load(RoadTag::S4);
        let core = v.core_heads(&s4);
        assert!(core.iter().all(|&id| !v.label(id).starts_with("light+")));
        assert!(core.contains(&v.head_id("npc1+lane6").unwrap()));
        assert!(!core.contains(&v.head_id("npc1+lane7").unwrap()));
    }

    proptest! {
        #[test]
        fn quantization_is_idempotent(v in 0.0f64..=20.0, o in 0.0f64..=80.0, w in 0.0f64..=1.0, h in 0u32..24) {
            let voc = Vocabulary::standard();
            let seq = vec![format!("time+{h}+7"), format!("weather+fog+{w}"), format!("ego+lane2+{o}"), format!("ego+speed+{v}")];
            let once = voc.quantize(&seq).unwrap();
            let twice = voc.quantize(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            for (a, b) in seq.iter().zip(&once) {
                let x: f64 = a.rsplit('+').next().unwrap().parse().unwrap();
                let y: f64 = b.rsplit('+').next().unwrap().parse().unwrap();
                prop_assert!(y <= x + 1e-9 && x - y < 0.5 + 1e-9);
            }
        }
    }
}
