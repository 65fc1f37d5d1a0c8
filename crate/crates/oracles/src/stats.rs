//! Rank statistics and text-diversity metrics from their definitions.

use std::collections::HashSet;

/// Rank of each value: one plus the number of strictly smaller values, plus
/// half the number of other equal values.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Spearman correlation as the product-moment correlation of the ranks,
/// written with raw sums.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let sx: f64 = ra.iter().sum();
    let sy: f64 = rb.iter().sum();
    let sxx: f64 = ra.iter().map(|x| x * x).sum();
    let syy: f64 = rb.iter().map(|y| y * y).sum();
    let sxy: f64 = ra.iter().zip(&rb).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Unique over total n-grams by explicit enumeration.
pub fn distinct_n(seqs: &[Vec<String>], n: usize) -> f64 {
    let mut all = Vec::new();
    for s in seqs {
        if s.len() >= n {
            for i in 0..=s.len() - n {
                all.push(s[i..i + n].join("\u{1f}"));
            }
        }
    }
    let unique: HashSet<&String> = all.iter().collect();
    unique.len() as f64 / all.len() as f64
}
