//! Diversity and quality metrics over generated scenario sets.
//!
//! Token metrics (Distinct-n, Self-BLEU, entropy, coverage) are generic over the
//! token type. Self-BLEU uses these conventions:
//!
//! * n-gram orders `1..=min(cap, |hyp|)` with uniform weights (`cap` defaults to 4);
//! * clipped counts against the per-reference maximum (standard modified precision);
//! * unigram precision unsmoothed, higher orders add-one smoothed: `(m + 1) / (t + 1)`;
//! * brevity penalty `exp(1 - r / c)` when the hypothesis length `c` is shorter than
//!   the closest reference length `r` (ties to the shorter reference);
//! * the score of the set is the mean over hypotheses, each scored against all others.
//!
//! Percentiles use the nearest-rank method: the p-th percentile of `n` sorted
//! values is the element at rank `max(1, ceil(p / 100 * n))`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::RoadStructure;
use crate::scenario::{decode_structure, ActionSequence};
use crate::trace::Trace;

pub const METRICS_SCHEMA_VERSION: u32 = 1;
pub const SELF_BLEU_CAP: usize = 4;
pub const PERCENTILES: [f64; 5] = [0.0, 25.0, 50.0, 75.0, 100.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("DTW order must be at least 1, got {0}")]
    BadOrder(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("every sequence is shorter than n = {0}")]
    TooShort(usize),
    #[error("n-gram order must be positive")]
    ZeroN,
    #[error("need at least {needed} sequences, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("empty set")]
    EmptySet,
}

pub type Point = [f64; 2];

fn euclid(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// DTW distance `(min over monotone alignment paths of Σ d(x_i, y_j)^q)^(1/q)`
/// with Euclidean `d` and steps (1,0), (0,1), (1,1).
pub fn dtw(x: &[Point], y: &[Point], q: f64) -> Result<f64, MetricError> {
    if x.is_empty() || y.is_empty() {
        return Err(MetricError::EmptySequence);
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(MetricError::BadOrder(q));
    }
    if x.iter().chain(y).flatten().any(|c| !c.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, &xi) in x.iter().enumerate() {
        for j in 0..m {
            let cost = euclid(xi, y[j]).powf(q);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = best + cost;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1].powf(1.0 / q))
}

/// Unique n-grams over total n-grams across the whole set.
pub fn distinct_n<T: Eq + Hash>(sequences: &[Vec<T>], n: usize) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::ZeroN);
    }
    let mut unique = std::collections::HashSet::new();
    let mut total = 0usize;
    for s in sequences {
        for g in s.windows(n) {
            unique.insert(g);
            total += 1;
        }
    }
    if total == 0 {
        return Err(MetricError::TooShort(n));
    }
    Ok(unique.len() as f64 / total as f64)
}

fn ngram_counts<T: Eq + Hash>(s: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    for g in s.windows(n) {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// BLEU of `hyp` against `refs` with the conventions in the module docs.
pub fn bleu<T: Eq + Hash>(hyp: &[T], refs: &[&[T]], cap: usize) -> f64 {
    if hyp.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let orders = cap.min(hyp.len()).max(1);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let counts = ngram_counts(hyp, n);
        let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
        let total: usize = counts.values().sum();
        let matched: usize = counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.iter().map(|rc| rc.get(g).copied().unwrap_or(0)).max().unwrap_or(0)))
            .sum();
        let p = if n == 1 { matched as f64 / total as f64 } else { (matched + 1) as f64 / (total + 1) as f64 };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / orders as f64;
    }
    let c = hyp.len() as f64;
    let r = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&l| ((l as i64 - hyp.len() as i64).abs(), l))
        .expect("refs nonempty") as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}

/// Mean BLEU of each sequence against all the others.
pub fn self_bleu<T: Eq + Hash + Sync>(sequences: &[Vec<T>], cap: usize) -> Result<f64, MetricError> {
    if sequences.len() < 2 {
        return Err(MetricError::TooFew { needed: 2, got: sequences.len() });
    }
    let scores: Vec<f64> = (0..sequences.len())
        .into_par_iter()
        .map(|i| {
            let refs: Vec<&[T]> =
                sequences.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s.as_slice()).collect();
            bleu(&sequences[i], &refs, cap)
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Shannon entropy in bits of the unigram distribution over the whole set.
pub fn entropy<T: Eq + Hash>(sequences: &[Vec<T>]) -> Result<f64, MetricError> {
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for t in sequences.iter().flatten() {
        *counts.entry(t).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(MetricError::EmptySet);
    }
    let mut ps: Vec<f64> = counts.values().map(|&c| c as f64 / total as f64).collect();
    ps.sort_by(f64::total_cmp);
    Ok(ps.iter().map(|p| -p * p.log2()).sum::<f64>().max(0.0))
}

/// Fraction of `core` tokens used somewhere in the set.
pub fn coverage<T: Ord>(sequences: &[Vec<T>], core: &[T]) -> Result<f64, MetricError> {
    let core: BTreeSet<&T> = core.iter().collect();
    if core.is_empty() || sequences.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let used: BTreeSet<&T> = sequences.iter().flatten().filter(|t| core.contains(t)).collect();
    Ok(used.len() as f64 / core.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    /// Fraction of sequences that decode with every required field present.
    pub completeness: f64,
    /// Fraction of sequences that decode and pass every scenario constraint.
    pub satisfaction: f64,
}

/// Completeness and satisfaction rates of action sequences on `road`. Both
/// rates are over the whole batch, so satisfaction never exceeds completeness.
pub fn validity<S: AsRef<str>>(sequences: &[Vec<S>], road: &RoadStructure) -> Validity {
    if sequences.is_empty() {
        return Validity { completeness: 0.0, satisfaction: 0.0 };
    }
    let (mut complete, mut satisfied) = (0usize, 0usize);
    for s in sequences {
        if let Ok(scenario) = decode_structure(s, road.tag) {
            complete += 1;
            if scenario.validate(road).is_ok() {
                satisfied += 1;
            }
        }
    }
    let n = sequences.len() as f64;
    Validity { completeness: complete as f64 / n, satisfaction: satisfied as f64 / n }
}

/// Nearest-rank percentiles of `values` at each of `ps` (in percent).
pub fn percentiles(values: &[f64], ps: &[f64]) -> Result<Vec<f64>, MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(ps
        .iter()
        .map(|p| {
            let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
            v[rank.min(v.len()) - 1]
        })
        .collect())
}

/// Per-NPC position sequences, one per scenario in which the NPC appears.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    pub npcs: BTreeMap<String, Vec<Vec<Point>>>,
}

impl TrajectorySet {
    /// Collects `npcK.x` / `npcK.y` from each trace, keeping every `stride`-th
    /// sample at which `npcK.active` is non-zero (all samples if that signal is
    /// absent).
    pub fn from_traces<'a>(traces: impl IntoIterator<Item = &'a Trace>, stride: usize) -> TrajectorySet {
        let stride = stride.max(1);
        let mut npcs: BTreeMap<String, Vec<Vec<Point>>> = BTreeMap::new();
        for trace in traces {
            for k in 1..=crate::scenario::MAX_NPCS {
                let id = format!("npc{k}");
                let (Some(xs), Some(ys)) = (trace.numeric(&format!("{id}.x")), trace.numeric(&format!("{id}.y"))) else {
                    continue;
                };
                let active = trace.numeric(&format!("{id}.active"));
                let path: Vec<Point> = (0..trace.len())
                    .filter(|&i| active.is_none_or(|a| a[i] != 0.0))
                    .step_by(stride)
                    .map(|i| [xs[i], ys[i]])
                    .collect();
                if !path.is_empty() {
                    npcs.entry(id).or_default().push(path);
                }
            }
        }
        TrajectorySet { npcs }
    }

    /// All pairwise DTW distances per NPC, in `(i, j)` order with `i < j`.
    pub fn pairwise_dtw(&self, q: f64) -> Result<BTreeMap<String, Vec<f64>>, MetricError> {
        let mut out = BTreeMap::new();
        for (id, paths) in &self.npcs {
            let pairs: Vec<(usize, usize)> =
                (0..paths.len()).flat_map(|i| (i + 1..paths.len()).map(move |j| (i, j))).collect();
            let d = pairs.par_iter().map(|&(i, j)| dtw(&paths[i], &paths[j], q)).collect::<Result<Vec<_>, _>>()?;
            out.insert(id.clone(), d);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub samples: usize,
    /// Nearest-rank percentiles 0/25/50/75/100 of pairwise DTW per NPC.
    pub dtw: BTreeMap<String, Vec<f64>>,
    pub distinct: [f64; 3],
    pub self_bleu: f64,
    pub entropy: f64,
    pub coverage: f64,
    pub completeness: f64,
    pub satisfaction: f64,
}

/// Assembles every metric for one generated batch. `tokens` are vocabulary
/// ids, `actions` the decoded action sequences of the same batch.
pub fn metric_report(
    tokens: &[Vec<u32>],
    actions: &[ActionSequence],
    core: &[u32],
    trajectories: &TrajectorySet,
    road: &RoadStructure,
) -> Result<MetricReport, MetricError> {
    let mut distinct = [0.0; 3];
    for (n, slot) in distinct.iter_mut().enumerate() {
        *slot = distinct_n(tokens, n + 1).unwrap_or(0.0);
    }
    let dtw = trajectories
        .pairwise_dtw(1.0)?
        .into_iter()
        .filter(|(_, d)| !d.is_empty())
        .map(|(id, d)| Ok((id, percentiles(&d, &PERCENTILES)?)))
        .collect::<Result<_, MetricError>>()?;
    let v = validity(actions, road);
    Ok(MetricReport {
        schema_version: METRICS_SCHEMA_VERSION,
        samples: tokens.len(),
        dtw,
        distinct,
        self_bleu: self_bleu(tokens, SELF_BLEU_CAP)?,
        entropy: entropy(tokens)?,
        coverage: coverage(tokens, core)?,
        completeness: v.completeness,
        satisfaction: v.satisfaction,
    })
}
