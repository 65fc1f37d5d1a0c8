//! Direct STL evaluation: every node's value at each instant is computed from
//! the definition by scanning all grid instants of its window, with window
//! membership decided by comparing elapsed time against the bounds.

use lawgen_core::stl::{Comparator, Formula, Operand, Param, Window};
use lawgen_core::trace::{SignalData, Trace};

const KAPPA: f64 = 1.0;
const SPEED: &str = "real_speed";
const EPS: f64 = 1e-9;

fn num<'a>(trace: &'a Trace, name: &str) -> &'a [f64] {
    match trace.signal(name) {
        Some(SignalData::Numeric(v)) => v,
        other => panic!("oracle needs numeric signal `{name}`, found {other:?}"),
    }
}

fn cat_eq(trace: &Trace, name: &str, lit: &str, i: usize) -> bool {
    match trace.signal(name) {
        Some(SignalData::Categorical { alphabet, values }) => alphabet[values[i] as usize] == lit,
        other => panic!("oracle needs categorical signal `{name}`, found {other:?}"),
    }
}

fn param(trace: &Trace, p: &Param, i: usize) -> f64 {
    match p {
        Param::Const(c) => *c,
        Param::Signal(s) => num(trace, s)[i],
    }
}

/// Grid instants `k` in `[i, m)` that fall inside the window anchored at `i`.
fn window_members<'a>(w: Option<&'a Window>, trace: &'a Trace, i: usize, m: usize) -> impl Iterator<Item = usize> + 'a {
    let step = trace.step();
    (i..m).filter(move |&k| {
        let Some(w) = w else { return true };
        let dk = k - i;
        let elapsed = dk as f64 * step;
        if elapsed < w.lower - EPS * step {
            return false;
        }
        match &w.upper {
            Param::Const(b) => elapsed <= b + EPS * step,
            Param::Signal(s) => {
                let d = num(trace, s)[i];
                let v = num(trace, SPEED)[i];
                // At least one sample ahead, and never shorter than the lower bound.
                let lower_steps = (w.lower / step - EPS).ceil().max(0.0) as usize;
                v <= 0.0 || dk <= 1 || dk <= lower_steps || (dk as f64) <= d.max(0.0) / (v * step) + EPS
            }
        }
    })
}

/// Scans each window of a child signal; instants whose window holds no
/// defined child value end the defined prefix.
fn scan<T: Copy>(
    window: Option<&Window>,
    trace: &Trace,
    child: &[T],
    init: T,
    op: impl Fn(T, T) -> T,
) -> Vec<T> {
    let m = child.len();
    let mut out = Vec::new();
    for i in 0..m {
        let mut members = window_members(window, trace, i, m).peekable();
        if members.peek().is_none() {
            break;
        }
        out.push(members.fold(init, |acc, k| op(acc, child[k])));
    }
    out
}

fn zip_with<T: Copy>(xs: Vec<Vec<T>>, init: T, op: impl Fn(T, T) -> T, n: usize) -> Vec<T> {
    let len = xs.iter().map(Vec::len).min().unwrap_or(n);
    (0..len).map(|i| xs.iter().fold(init, |acc, x| op(acc, x[i]))).collect()
}

/// Robustness at every instant of the defined prefix.
pub fn robustness_signal(f: &Formula, trace: &Trace) -> Vec<f64> {
    let n = trace.len();
    match f {
        Formula::Not(x) => robustness_signal(x, trace).into_iter().map(|v| -v).collect(),
        Formula::And(xs) => zip_with(xs.iter().map(|x| robustness_signal(x, trace)).collect(), f64::INFINITY, f64::min, n),
        Formula::Or(xs) => {
            zip_with(xs.iter().map(|x| robustness_signal(x, trace)).collect(), f64::NEG_INFINITY, f64::max, n)
        }
        Formula::Implies(a, b) => {
            let (a, b) = (robustness_signal(a, trace), robustness_signal(b, trace));
            a.iter().zip(&b).map(|(a, b)| (-a).max(*b)).collect()
        }
        Formula::Always { window, body } => scan(window.as_ref(), trace, &robustness_signal(body, trace), f64::INFINITY, f64::min),
        Formula::Eventually { window, body } => {
            scan(window.as_ref(), trace, &robustness_signal(body, trace), f64::NEG_INFINITY, f64::max)
        }
        leaf => (0..n).map(|i| leaf_rob(leaf, trace, i)).collect(),
    }
}

/// Robustness of `f` at sample `i`, or `None` past its defined prefix.
pub fn robustness_at(f: &Formula, trace: &Trace, i: usize) -> Option<f64> {
    robustness_signal(f, trace).get(i).copied()
}

fn leaf_rob(f: &Formula, trace: &Trace, i: usize) -> f64 {
    match f {
        Formula::True => f64::INFINITY,
        Formula::False => f64::NEG_INFINITY,
        Formula::Atom(a) => match &a.rhs {
            Operand::Category(name) if matches!(trace.signal(&a.signal), Some(SignalData::Numeric(_))) => {
                let (x, c) = (num(trace, &a.signal)[i], num(trace, name)[i]);
                if a.cmp == Comparator::Eq {
                    -(x - c).abs()
                } else {
                    (x - c).abs()
                }
            }
            Operand::Category(lit) => {
                let eq = cat_eq(trace, &a.signal, lit, i);
                let holds = if a.cmp == Comparator::Eq { eq } else { !eq };
                if holds {
                    KAPPA
                } else {
                    -KAPPA
                }
            }
            rhs => {
                let x = num(trace, &a.signal)[i];
                let c = match rhs {
                    Operand::Const(c) => *c,
                    Operand::Signal(s) => num(trace, s)[i],
                    Operand::Category(_) => unreachable!(),
                };
                match a.cmp {
                    Comparator::Gt | Comparator::Ge => x - c,
                    Comparator::Lt | Comparator::Le => c - x,
                    Comparator::Eq => -(x - c).abs(),
                    Comparator::Ne => (x - c).abs(),
                }
            }
        },
        Formula::Prop(s) => {
            if num(trace, s)[i] != 0.0 {
                KAPPA
            } else {
                -KAPPA
            }
        }
        Formula::Within { signal, budget } => param(trace, budget, i) - num(trace, signal)[i],
        _ => unreachable!("not a leaf"),
    }
}

/// Boolean satisfaction at every instant of the defined prefix, computed
/// without any robustness values.
pub fn satisfaction_signal(f: &Formula, trace: &Trace) -> Vec<bool> {
    let n = trace.len();
    let and = |a: bool, b: bool| a && b;
    let or = |a: bool, b: bool| a || b;
    match f {
        Formula::Not(x) => satisfaction_signal(x, trace).into_iter().map(|v| !v).collect(),
        Formula::And(xs) => zip_with(xs.iter().map(|x| satisfaction_signal(x, trace)).collect(), true, and, n),
        Formula::Or(xs) => zip_with(xs.iter().map(|x| satisfaction_signal(x, trace)).collect(), false, or, n),
        Formula::Implies(a, b) => {
            let (a, b) = (satisfaction_signal(a, trace), satisfaction_signal(b, trace));
            a.iter().zip(&b).map(|(a, b)| !a || *b).collect()
        }
        Formula::Always { window, body } => scan(window.as_ref(), trace, &satisfaction_signal(body, trace), true, and),
        Formula::Eventually { window, body } => {
            scan(window.as_ref(), trace, &satisfaction_signal(body, trace), false, or)
        }
        leaf => (0..n).map(|i| leaf_holds(leaf, trace, i)).collect(),
    }
}

pub fn holds_at(f: &Formula, trace: &Trace, i: usize) -> Option<bool> {
    satisfaction_signal(f, trace).get(i).copied()
}

fn leaf_holds(f: &Formula, trace: &Trace, i: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => match &a.rhs {
            Operand::Category(name) if matches!(trace.signal(&a.signal), Some(SignalData::Numeric(_))) => {
                (num(trace, &a.signal)[i] == num(trace, name)[i]) == (a.cmp == Comparator::Eq)
            }
            Operand::Category(lit) => cat_eq(trace, &a.signal, lit, i) == (a.cmp == Comparator::Eq),
            rhs => {
                let x = num(trace, &a.signal)[i];
                let c = match rhs {
                    Operand::Const(c) => *c,
                    Operand::Signal(s) => num(trace, s)[i],
                    Operand::Category(_) => unreachable!(),
                };
                match a.cmp {
                    Comparator::Gt => x > c,
                    Comparator::Ge => x >= c,
                    Comparator::Lt => x < c,
                    Comparator::Le => x <= c,
                    Comparator::Eq => x == c,
                    Comparator::Ne => x != c,
                }
            }
        },
        Formula::Prop(s) => num(trace, s)[i] != 0.0,
        Formula::Within { signal, budget } => num(trace, signal)[i] <= param(trace, budget, i),
        _ => unreachable!("not a leaf"),
    }
}
