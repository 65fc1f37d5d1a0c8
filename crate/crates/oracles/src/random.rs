//! Random formulas and traces over a fixed signal set, for differential tests.

use lawgen_core::stl::{Atom, Comparator, Formula, Operand, Param, Window};
use lawgen_core::trace::Trace;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const NUMERIC: [&str; 4] = ["x", "y", "z", "real_speed"];
pub const COLORS: [&str; 3] = ["red", "yellow", "green"];
const CMPS: [Comparator; 6] =
    [Comparator::Gt, Comparator::Lt, Comparator::Ge, Comparator::Le, Comparator::Eq, Comparator::Ne];

/// A trace with numeric `x`, `y`, `z`, `real_speed` (sometimes zero), `dist`
/// and `budget`, boolean `p` and categorical `color`.
pub fn trace<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Trace {
    let step = *[0.1, 0.25, 0.5, 1.0].choose(rng).unwrap();
    let mut t = Trace::new(step, len).expect("positive length");
    for name in ["x", "y", "z"] {
        // Quarter-unit grid so `=` atoms and ties occur.
        let coarse = rng.random_bool(0.3);
        let v: Vec<f64> = (0..len)
            .map(|_| {
                let v = rng.random_range(-5.0..5.0);
                if coarse {
                    (v * 4.0f64).round() / 4.0
                } else {
                    v
                }
            })
            .collect();
        t = t.with_numeric(name, v).unwrap();
    }
    let speed = (0..len).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..15.0) }).collect();
    let dist = (0..len).map(|_| rng.random_range(0.0..30.0)).collect();
    let budget = (0..len).map(|_| rng.random_range(0.0..20.0)).collect();
    let p = (0..len).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let colors: Vec<&str> = (0..len).map(|_| *COLORS.choose(rng).unwrap()).collect();
    t.with_numeric("real_speed", speed)
        .and_then(|t| t.with_numeric("dist", dist))
        .and_then(|t| t.with_numeric("budget", budget))
        .and_then(|t| t.with_numeric("p", p))
        .and_then(|t| t.with_categorical("color", &COLORS, &colors))
        .expect("consistent lengths")
}

fn leaf<R: Rng + ?Sized>(rng: &mut R) -> Formula {
    match rng.random_range(0..10) {
        0..=4 => {
            let signal = NUMERIC.choose(rng).unwrap().to_string();
            let rhs = if rng.random_bool(0.2) {
                Operand::Signal(NUMERIC.choose(rng).unwrap().to_string())
            } else {
                Operand::Const((rng.random_range(-5.0f64..5.0) * 4.0).round() / 4.0)
            };
            Formula::Atom(Atom { signal, cmp: *CMPS.choose(rng).unwrap(), rhs })
        }
        5 => Formula::Atom(Atom {
            signal: "color".into(),
            cmp: if rng.random_bool(0.5) { Comparator::Eq } else { Comparator::Ne },
            rhs: Operand::Category(COLORS.choose(rng).unwrap().to_string()),
        }),
        6 => Formula::Prop("p".into()),
        7 => Formula::Within {
            signal: "dist".into(),
            budget: if rng.random_bool(0.5) { Param::Signal("budget".into()) } else { Param::Const(rng.random_range(0.0..20.0)) },
        },
        8 if rng.random_bool(0.3) => {
            if rng.random_bool(0.5) {
                Formula::True
            } else {
                Formula::False
            }
        }
        _ => Formula::atom("x", Comparator::Gt, rng.random_range(-3.0..3.0)),
    }
}

fn window<R: Rng + ?Sized>(rng: &mut R) -> Option<Window> {
    match rng.random_range(0..4) {
        0 => None,
        1 => Some(Window { lower: 0.0, upper: Param::Signal("dist".into()) }),
        _ => {
            let a = (rng.random_range(0.0f64..3.0) * 20.0).round() / 20.0;
            let b = a + (rng.random_range(0.0f64..4.0) * 20.0).round() / 20.0;
            Some(Window { lower: a, upper: Param::Const(b) })
        }
    }
}

/// A formula of depth at most `depth` (leaves have depth 1).
pub fn formula<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> Formula {
    if depth <= 1 || rng.random_bool(0.2) {
        return leaf(rng);
    }
    let sub = |rng: &mut R| formula(rng, depth - 1);
    match rng.random_range(0..7) {
        0 => Formula::not(sub(rng)),
        1 => Formula::And((0..rng.random_range(2..=3)).map(|_| sub(rng)).collect()),
        2 => Formula::Or((0..rng.random_range(2..=3)).map(|_| sub(rng)).collect()),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 | 5 => Formula::always(window(rng), sub(rng)),
        _ => Formula::eventually(window(rng), sub(rng)),
    }
}
