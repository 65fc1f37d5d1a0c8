//! Quantitative (space-robustness) semantics over sampled traces.
//!
//! Every subformula is evaluated bottom-up into a robustness signal over the
//! sample instants of the trace. A bounded temporal operator whose window runs
//! past the end of its operand's signal is clipped; once the window is entirely
//! past the end the value is undefined, so each robustness signal is defined on a
//! prefix of the trace. Asking for a value outside that prefix is an error.

use thiserror::Error;

use super::ast::{Atom, Comparator, Formula, Operand, Param, Window};
use crate::trace::{SignalData, Trace, TraceError};

/// Slack used when converting window bounds in seconds to sample counts.
const STEP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("trace has no signal `{0}`")]
    MissingSignal(String),
    #[error("signal `{signal}` is not {expected}")]
    TypeMismatch { signal: String, expected: &'static str },
    #[error("category `{category}` is not in the alphabet of `{signal}`")]
    UnknownCategory { signal: String, category: String },
    #[error("evaluation window at t = {t} lies entirely past the end of the trace")]
    EmptyWindow { t: f64 },
    #[error("time {t} outside the trace domain [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorOptions {
    /// Magnitude of categorical (in)equality and boolean proposition robustness.
    pub kappa: f64,
    /// Speed signal used to turn distance budgets into time horizons.
    pub speed_signal: String,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions { kappa: 1.0, speed_signal: "real_speed".to_string() }
    }
}

/// Robustness of `formula` on `trace` at time `t`, with default options.
pub fn robustness(formula: &Formula, trace: &Trace, t: f64) -> Result<f64, EvalError> {
    robustness_with(formula, trace, t, &MonitorOptions::default())
}

pub fn robustness_with(formula: &Formula, trace: &Trace, t: f64, opts: &MonitorOptions) -> Result<f64, EvalError> {
    let idx = trace.index_at(t).map_err(|e| match e {
        TraceError::TimeOutOfRange { t, duration } => EvalError::TimeOutOfRange { t, duration },
        _ => EvalError::TimeOutOfRange { t, duration: trace.duration() },
    })?;
    let sig = robustness_signal(formula, trace, opts)?;
    sig.get(idx).copied().ok_or(EvalError::EmptyWindow { t })
}

/// Robustness at every sample instant where it is defined (a prefix of the trace).
pub fn robustness_signal(formula: &Formula, trace: &Trace, opts: &MonitorOptions) -> Result<Vec<f64>, EvalError> {
    Evaluator { trace, opts }.eval(formula)
}

/// Sample offsets covered by a window whose bounds are in seconds.
pub(crate) fn window_steps(lower: f64, upper: f64, step: f64) -> (usize, usize) {
    let lo = (lower / step - STEP_EPS).ceil().max(0.0) as usize;
    let hi = (upper / step + STEP_EPS).floor().max(0.0) as usize;
    (lo, hi)
}

/// Horizon in samples for a distance budget `dist` travelled at speed `v`; at
/// least one sample, unbounded when standing still.
pub(crate) fn distance_steps(dist: f64, v: f64, step: f64) -> usize {
    if v > 0.0 {
        let steps = (dist.max(0.0) / (v * step) + STEP_EPS).floor();
        if steps >= usize::MAX as f64 {
            usize::MAX
        } else {
            (steps as usize).max(1)
        }
    } else {
        usize::MAX
    }
}

struct Evaluator<'a> {
    trace: &'a Trace,
    opts: &'a MonitorOptions,
}

impl Evaluator<'_> {
    fn numeric(&self, name: &str) -> Result<&[f64], EvalError> {
        match self.trace.signal(name) {
            Some(SignalData::Numeric(v)) => Ok(v),
            Some(_) => Err(EvalError::TypeMismatch { signal: name.into(), expected: "numeric" }),
            None => Err(EvalError::MissingSignal(name.into())),
        }
    }

    fn param(&self, p: &Param) -> Result<Vec<f64>, EvalError> {
        match p {
            Param::Const(c) => Ok(vec![*c; self.trace.len()]),
            Param::Signal(s) => Ok(self.numeric(s)?.to_vec()),
        }
    }

    fn eval(&self, f: &Formula) -> Result<Vec<f64>, EvalError> {
        let n = self.trace.len();
        let kappa = self.opts.kappa;
        Ok(match f {
            Formula::True => vec![f64::INFINITY; n],
            Formula::False => vec![f64::NEG_INFINITY; n],
            Formula::Atom(a) => self.atom(a)?,
            Formula::Prop(s) => self.numeric(s)?.iter().map(|&x| if x != 0.0 { kappa } else { -kappa }).collect(),
            Formula::Within { signal, budget } => {
                let x = self.numeric(signal)?;
                let b = self.param(budget)?;
                x.iter().zip(&b).map(|(x, b)| b - x).collect()
            }
            Formula::Not(x) => self.eval(x)?.into_iter().map(|v| -v).collect(),
            Formula::And(xs) => self.fold(xs, f64::min)?,
            Formula::Or(xs) => self.fold(xs, f64::max)?,
            Formula::Implies(a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                a.iter().zip(&b).map(|(a, b)| (-a).max(*b)).collect()
            }
            Formula::Always { window, body } => self.temporal(window.as_ref(), body, false)?,
            Formula::Eventually { window, body } => self.temporal(window.as_ref(), body, true)?,
        })
    }

    fn fold(&self, xs: &[Formula], op: fn(f64, f64) -> f64) -> Result<Vec<f64>, EvalError> {
        let mut acc: Option<Vec<f64>> = None;
        for x in xs {
            let v = self.eval(x)?;
            acc = Some(match acc {
                None => v,
                Some(a) => a.iter().zip(&v).map(|(a, b)| op(*a, *b)).collect(),
            });
        }
        Ok(acc.unwrap_or_default())
    }

    fn atom(&self, a: &Atom) -> Result<Vec<f64>, EvalError> {
        let lhs = self.trace.signal(&a.signal).ok_or_else(|| EvalError::MissingSignal(a.signal.clone()))?;
        match lhs {
            SignalData::Numeric(x) => {
                let rhs = match &a.rhs {
                    Operand::Const(c) => vec![*c; x.len()],
                    Operand::Signal(s) => self.numeric(s)?.to_vec(),
                    // `x = y` parses with a category operand; against a numeric
                    // subject it names a signal.
                    Operand::Category(s) => match self.trace.signal(s) {
                        Some(SignalData::Numeric(v)) => v.clone(),
                        _ => {
                            return Err(EvalError::TypeMismatch { signal: a.signal.clone(), expected: "categorical" })
                        }
                    },
                };
                Ok(x.iter().zip(&rhs).map(|(&x, &c)| numeric_atom(a.cmp, x, c)).collect())
            }
            SignalData::Categorical { alphabet, values } => {
                let Operand::Category(cat) = &a.rhs else {
                    return Err(EvalError::TypeMismatch { signal: a.signal.clone(), expected: "numeric" });
                };
                if !a.cmp.is_equality() {
                    return Err(EvalError::TypeMismatch { signal: a.signal.clone(), expected: "numeric" });
                }
                let code = alphabet.iter().position(|c| c == cat).ok_or_else(|| EvalError::UnknownCategory {
                    signal: a.signal.clone(),
                    category: cat.clone(),
                })? as u32;
                let k = self.opts.kappa;
                let sign = if a.cmp == Comparator::Eq { 1.0 } else { -1.0 };
                Ok(values.iter().map(|&v| if v == code { sign * k } else { -sign * k }).collect())
            }
        }
    }

    fn temporal(&self, window: Option<&Window>, body: &Formula, eventually: bool) -> Result<Vec<f64>, EvalError> {
        let child = self.eval(body)?;
        let m = child.len();
        let pick = if eventually { f64::max } else { f64::min };
        let Some(w) = window else {
            let mut out = child;
            for i in (0..m.saturating_sub(1)).rev() {
                out[i] = pick(out[i], out[i + 1]);
            }
            return Ok(out);
        };
        let step = self.trace.step();
        let table = SparseTable::new(&child, eventually);
        match &w.upper {
            Param::Const(b) => {
                let (lo, hi) = window_steps(w.lower, *b, step);
                if lo > hi || lo >= m {
                    return Ok(Vec::new());
                }
                Ok((0..m - lo).map(|i| table.query(i + lo, (i.saturating_add(hi)).min(m - 1))).collect())
            }
            Param::Signal(budget) => {
                let (lo, _) = window_steps(w.lower, 0.0, step);
                let dist = self.numeric(budget)?;
                let speed = self.numeric(&self.opts.speed_signal)?;
                if lo >= m {
                    return Ok(Vec::new());
                }
                Ok((0..m - lo)
                    .map(|i| {
                        let hi = distance_steps(dist[i], speed[i], step).max(lo);
                        table.query(i + lo, i.saturating_add(hi).min(m - 1))
                    })
                    .collect())
            }
        }
    }
}

fn numeric_atom(cmp: Comparator, x: f64, c: f64) -> f64 {
    match cmp {
        Comparator::Gt | Comparator::Ge => x - c,
        Comparator::Lt | Comparator::Le => c - x,
        Comparator::Eq => -(x - c).abs(),
        Comparator::Ne => (x - c).abs(),
    }
}

/// Idempotent range-extremum table: O(n log n) build, O(1) inclusive queries.
struct SparseTable {
    levels: Vec<Vec<f64>>,
    max: bool,
}

impl SparseTable {
    fn new(data: &[f64], max: bool) -> SparseTable {
        let mut levels = vec![data.to_vec()];
        let mut width = 1;
        while 2 * width <= data.len() {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..prev.len() - width)
                .map(|i| if max { prev[i].max(prev[i + width]) } else { prev[i].min(prev[i + width]) })
                .collect();
            levels.push(next);
            width *= 2;
        }
        SparseTable { levels, max }
    }

    fn query(&self, l: usize, r: usize) -> f64 {
        debug_assert!(l <= r);
        let k = (usize::BITS - 1 - (r - l + 1).leading_zeros()) as usize;
        let row = &self.levels[k];
        let (a, b) = (row[l], row[r + 1 - (1 << k)]);
        if self.max {
            a.max(b)
        } else {
            a.min(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;
    use proptest::prelude::*;

    fn trace_with(name: &str, xs: Vec<f64>, step: f64) -> Trace {
        let n = xs.len();
        Trace::new(step, n).unwrap().with_numeric(name, xs).unwrap()
    }

    #[test]
    fn atom_margin() {
        let t = trace_with("real_speed", vec![7.0; 20], 0.1);
        let f = parse_formula("real_speed > 5.0").unwrap();
        for t_ in [0.0, 0.7, 1.9, 2.0] {
            assert_eq!(robustness(&f, &t, t_).unwrap(), 2.0);
        }
    }

    #[test]
    fn always_takes_the_dip() {
        let mut xs = vec![3.0; 30];
        xs[17] = -1.0;
        let t = trace_with("speed", xs, 0.1);
        assert_eq!(robustness(&parse_formula("G (speed > 0)").unwrap(), &t, 0.0).unwrap(), -1.0);
    }

    #[test]
    fn categorical_equality_uses_kappa() {
        let t = Trace::new(1.0, 3).unwrap().with_categorical("c", &["red", "green"], &["red", "green", "red"]).unwrap();
        let eq = parse_formula("c = red").unwrap();
        let sig = robustness_signal(&eq, &t, &MonitorOptions::default()).unwrap();
        assert_eq!(sig, vec![1.0, -1.0, 1.0]);
        let opts = MonitorOptions { kappa: 2.5, ..Default::default() };
        let ne = parse_formula("c != red").unwrap();
        assert_eq!(robustness_signal(&ne, &t, &opts).unwrap(), vec![-2.5, 2.5, -2.5]);
        let bad = parse_formula("c = blue").unwrap();
        assert!(matches!(robustness(&bad, &t, 0.0), Err(EvalError::UnknownCategory { .. })));
        assert!(matches!(robustness(&parse_formula("c > 1").unwrap(), &t, 0.0), Err(EvalError::TypeMismatch { .. })));
    }

    #[test]
    fn errors() {
        let t = trace_with("x", vec![1.0, 2.0, 3.0], 1.0);
        assert_eq!(robustness(&parse_formula("y > 0").unwrap(), &t, 0.0), Err(EvalError::MissingSignal("y".into())));
        let late = parse_formula("F[5, 6] x > 0").unwrap();
        assert!(matches!(robustness(&late, &t, 0.0), Err(EvalError::EmptyWindow { .. })));
        let clipped = parse_formula("F[1, 6] x > 0").unwrap();
        assert_eq!(robustness(&clipped, &t, 0.0).unwrap(), 3.0);
        assert_eq!(robustness(&clipped, &t, 1.0).unwrap(), 3.0);
        assert!(matches!(robustness(&clipped, &t, 2.0), Err(EvalError::EmptyWindow { .. })));
        assert!(matches!(robustness(&clipped, &t, 9.0), Err(EvalError::TimeOutOfRange { .. })));
    }

    #[test]
    fn distance_window_follows_speed() {
        // 10 m at 5 m/s with 0.5 s steps is 4 samples ahead.
        let n = 12;
        let mut goal = vec![-1.0; n];
        goal[4] = 1.0;
        let t = Trace::new(0.5, n)
            .unwrap()
            .with_numeric("real_speed", vec![5.0; n])
            .unwrap()
            .with_numeric("length", vec![10.0; n])
            .unwrap()
            .with_numeric("goal", goal)
            .unwrap();
        let f = parse_formula("F[0, length] goal > 0").unwrap();
        let sig = robustness_signal(&f, &t, &MonitorOptions::default()).unwrap();
        assert_eq!(&sig[..6], &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn standing_still_sees_to_the_end() {
        let n = 50;
        let mut goal = vec![-1.0; n];
        goal[n - 1] = 1.0;
        let t = Trace::new(0.1, n)
            .unwrap()
            .with_numeric("real_speed", vec![0.0; n])
            .unwrap()
            .with_numeric("length", vec![1.0; n])
            .unwrap()
            .with_numeric("goal", goal)
            .unwrap();
        let f = parse_formula("F[0, length] goal > 0").unwrap();
        assert_eq!(robustness(&f, &t, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn sparse_table_matches_scan() {
        let data: Vec<f64> = (0..37).map(|i| ((i * 7919) % 23) as f64 - 11.0).collect();
        let tmin = SparseTable::new(&data, false);
        let tmax = SparseTable::new(&data, true);
        for l in 0..data.len() {
            for r in l..data.len() {
                let s = &data[l..=r];
                assert_eq!(tmin.query(l, r), s.iter().cloned().fold(f64::INFINITY, f64::min));
                assert_eq!(tmax.query(l, r), s.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            }
        }
    }

    fn formula_strategy() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            (-3.0f64..3.0).prop_map(|c| Formula::atom("x", Comparator::Gt, c)),
            (-3.0f64..3.0).prop_map(|c| Formula::atom("y", Comparator::Le, c)),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::And(vec![a, b])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(vec![a, b])),
                (0usize..3, 0usize..4, inner.clone()).prop_map(|(a, w, f)| Formula::always(
                    Some(Window { lower: a as f64 * 0.1, upper: Param::Const((a + w) as f64 * 0.1) }),
                    f
                )),
                inner.clone().prop_map(|f| Formula::eventually(None, f)),
            ]
        })
    }

    proptest! {
        #[test]
        fn negation_is_antisymmetric(f in formula_strategy(), xs in prop::collection::vec(-3.0f64..3.0, 20)) {
            let t = trace_with("x", xs.clone(), 0.1).with_numeric("y", xs.iter().map(|v| -v).collect()).unwrap();
            let o = MonitorOptions::default();
            let a = robustness_signal(&f, &t, &o).unwrap();
            let b = robustness_signal(&Formula::not(f), &t, &o).unwrap();
            prop_assert_eq!(a.len(), b.len());
            prop_assert!(a.iter().zip(&b).all(|(a, b)| *a == -*b));
        }

        #[test]
        fn conjunction_is_exact_min(f in formula_strategy(), g in formula_strategy(), xs in prop::collection::vec(-3.0f64..3.0, 20)) {
            let t = trace_with("x", xs.clone(), 0.1).with_numeric("y", xs.iter().map(|v| v * 0.5).collect()).unwrap();
            let o = MonitorOptions::default();
            let a = robustness_signal(&f, &t, &o).unwrap();
            let b = robustness_signal(&g, &t, &o).unwrap();
            let c = robustness_signal(&Formula::And(vec![f, g]), &t, &o).unwrap();
            prop_assert_eq!(c.len(), a.len().min(b.len()));
            for i in 0..c.len() {
                prop_assert_eq!(c[i], a[i].min(b[i]));
            }
        }

        #[test]
        fn shrinking_window_never_lowers_always(
            xs in prop::collection::vec(-3.0f64..3.0, 30),
            a in 0usize..4, short in 0usize..5, extra in 0usize..5,
        ) {
            let t = trace_with("x", xs, 0.1);
            let o = MonitorOptions::default();
            let body = Formula::atom("x", Comparator::Gt, 0.0);
            let win = |b: usize| Some(Window { lower: a as f64 * 0.1, upper: Param::Const((a + b) as f64 * 0.1) });
            let narrow_g = robustness_signal(&Formula::always(win(short), body.clone()), &t, &o).unwrap();
            let wide_g = robustness_signal(&Formula::always(win(short + extra), body.clone()), &t, &o).unwrap();
            let narrow_f = robustness_signal(&Formula::eventually(win(short), body.clone()), &t, &o).unwrap();
            let wide_f = robustness_signal(&Formula::eventually(win(short + extra), body), &t, &o).unwrap();
            for i in 0..wide_g.len() {
                prop_assert!(narrow_g[i] >= wide_g[i]);
                prop_assert!(narrow_f[i] <= wide_f[i]);
            }
        }

        #[test]
        fn printed_formula_reparses(f in formula_strategy()) {
            let once = parse_formula(&f.to_string()).unwrap();
            prop_assert_eq!(&once, &f);
            prop_assert_eq!(parse_formula(&once.to_string()).unwrap(), once);
        }
    }
}
