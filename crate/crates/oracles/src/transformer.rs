//! Direct transformer decoder evaluation with plain nested vectors.

use lawgen_generator::tensor::Mat;
use lawgen_generator::{ModelConfig, Params};

pub type M = Vec<Vec<f64>>;

pub fn to_rows(m: &Mat) -> M {
    (0..m.rows).map(|r| m.row(r).to_vec()).collect()
}

pub fn mm(a: &M, b: &M) -> M {
    let (n, k, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            for (l, bl) in b.iter().enumerate().take(k) {
                out[i][j] += a[i][l] * bl[j];
            }
        }
    }
    out
}

pub fn cols(m: &M, from: usize, to: usize) -> M {
    m.iter().map(|r| r[from..to].to_vec()).collect()
}

pub fn layer_norm(x: &M, g: &[f64], b: &[f64]) -> M {
    x.iter()
        .map(|r| {
            let n = r.len() as f64;
            let mu = r.iter().sum::<f64>() / n;
            let var = r.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            r.iter().enumerate().map(|(i, v)| g[i] * (v - mu) / (var + 1e-5).sqrt() + b[i]).collect()
        })
        .collect()
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

/// Causal scaled dot-product attention `softmax(QKᵀ/√d_k + mask) V`.
pub fn attention(q: &M, k: &M, v: &M) -> M {
    let dk = q[0].len() as f64;
    let mut out = vec![vec![0.0; v[0].len()]; q.len()];
    for t in 0..q.len() {
        let scores: Vec<f64> =
            (0..=t).map(|u| q[t].iter().zip(&k[u]).map(|(a, b)| a * b).sum::<f64>() / dk.sqrt()).collect();
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
        for (u, s) in scores.iter().enumerate() {
            let w = (s - m).exp() / z;
            for (o, vv) in out[t].iter_mut().zip(&v[u]) {
                *o += w * vv;
            }
        }
    }
    out
}

/// Direct multi-head evaluation: per-head projections `A W_i^Q`, `A W_i^K`,
/// `A W_i^V`, concatenation, then the output projection `W^0`.
pub fn reference_logits(cfg: &ModelConfig, p: &Params, tokens: &[u32]) -> M {
    let d = cfg.d_model;
    let dh = d / cfg.heads;
    let mut x: M = tokens
        .iter()
        .enumerate()
        .map(|(pos, &t)| {
            (0..d)
                .map(|i| {
                    let angle = pos as f64 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
                    p.embed.at(t as usize, i) + if i % 2 == 0 { angle.sin() } else { angle.cos() }
                })
                .collect()
        })
        .collect();
    for l in &p.layers {
        let a = layer_norm(&x, &l.ln1_g.data, &l.ln1_b.data);
        let mut concat = vec![Vec::new(); tokens.len()];
        for i in 0..cfg.heads {
            let (lo, hi) = (i * dh, (i + 1) * dh);
            let head = attention(
                &mm(&a, &cols(&to_rows(&l.wq), lo, hi)),
                &mm(&a, &cols(&to_rows(&l.wk), lo, hi)),
                &mm(&a, &cols(&to_rows(&l.wv), lo, hi)),
            );
            for (c, h) in concat.iter_mut().zip(head) {
                c.extend(h);
            }
        }
        let o = mm(&concat, &to_rows(&l.wo));
        for (t, row) in x.iter_mut().enumerate() {
            for j in 0..d {
                row[j] += o[t][j] + l.bo.data[j];
            }
        }
        let c = layer_norm(&x, &l.ln2_g.data, &l.ln2_b.data);
        let u: M = mm(&c, &to_rows(&l.w1))
            .into_iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| gelu(v + l.b1.data[j])).collect())
            .collect();
        let f = mm(&u, &to_rows(&l.w2));
        for (t, row) in x.iter_mut().enumerate() {
            for j in 0..d {
                row[j] += f[t][j] + l.b2.data[j];
            }
        }
    }
    let z = layer_norm(&x, &p.lnf_g.data, &p.lnf_b.data);
    mm(&z, &to_rows(&p.w_out)).into_iter().map(|r| r.iter().zip(&p.b_out.data).map(|(a, b)| a + b).collect()).collect()
}

pub fn hand_set(rows: usize, cols: usize, salt: usize) -> Mat {
    Mat::from_vec(rows, cols, (0..rows * cols).map(|i| (((i * 7 + salt * 3) % 11) as f64 - 5.0) / 10.0).collect())
}

/// Hand-set model with d = 4, two heads and one layer.
pub fn tiny() -> (ModelConfig, Params) {
    let cfg = ModelConfig { vocab_size: 5, d_model: 4, heads: 2, layers: 1, d_ff: 3, context: 4 };
    let mut p = Params::zeros(&cfg);
    p.embed = hand_set(5, 4, 1);
    let l = &mut p.layers[0];
    l.ln1_g = Mat::from_vec(1, 4, vec![1.0, 0.9, 1.1, 1.0]);
    l.ln1_b = Mat::from_vec(1, 4, vec![0.0, 0.1, -0.1, 0.05]);
    l.wq = hand_set(4, 4, 2);
    l.wk = hand_set(4, 4, 3);
    l.wv = hand_set(4, 4, 4);
    l.wo = hand_set(4, 4, 5);
    l.bo = Mat::from_vec(1, 4, vec![0.1, 0.0, -0.1, 0.2]);
    l.ln2_g = Mat::from_vec(1, 4, vec![1.0, 1.0, 0.8, 1.2]);
    l.ln2_b = Mat::zeros(1, 4);
    l.w1 = hand_set(4, 3, 6);
    l.b1 = Mat::from_vec(1, 3, vec![0.0, 0.1, -0.2]);
    l.w2 = hand_set(3, 4, 7);
    l.b2 = Mat::from_vec(1, 4, vec![0.0, 0.0, 0.1, 0.0]);
    p.lnf_g = Mat::filled(1, 4, 1.0);
    p.w_out = hand_set(4, 5, 8);
    p.b_out = Mat::from_vec(1, 5, vec![0.0, 0.1, 0.2, 0.3, 0.4]);
    (cfg, p)
}

