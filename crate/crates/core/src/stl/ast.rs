use std::collections::BTreeSet;
use std::fmt;

/// Relational operator of an atomic predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Gt => ">",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
        }
    }

    /// `=` and `!=` compare categories; the ordering comparators need a metric.
    pub fn is_equality(self) -> bool {
        matches!(self, Comparator::Eq | Comparator::Ne)
    }
}

/// Right-hand side of an atomic comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Const(f64),
    /// Another numeric signal, e.g. `real_speed > speed`.
    Signal(String),
    /// Identifier after `=` or `!=`: a category literal of a categorical
    /// signal (`color = red`), or a signal name when the subject is numeric.
    Category(String),
}

/// `signal <cmp> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub signal: String,
    pub cmp: Comparator,
    pub rhs: Operand,
}

/// A number or a per-instant parameter read from the trace.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Const(f64),
    Signal(String),
}

/// Bounded temporal window `[lower, upper]`.
///
/// A constant upper bound is in seconds. A signal-valued upper bound is a
/// distance budget in meters, converted to a time horizon with the ego speed at
/// the evaluation instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lower: f64,
    pub upper: Param,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    /// Bare boolean signal: holds when the sample is non-zero.
    Prop(String),
    /// `signal(budget)`: the feature measured by `signal` (a distance) lies
    /// within `budget` meters. Equivalent to `signal <= budget`.
    Within { signal: String, budget: Param },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Always { window: Option<Window>, body: Box<Formula> },
    Eventually { window: Option<Window>, body: Box<Formula> },
}

impl Formula {
    pub fn atom(signal: &str, cmp: Comparator, rhs: f64) -> Formula {
        Formula::Atom(Atom { signal: signal.to_string(), cmp, rhs: Operand::Const(rhs) })
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn always(window: Option<Window>, body: Formula) -> Formula {
        Formula::Always { window, body: Box::new(body) }
    }

    pub fn eventually(window: Option<Window>, body: Formula) -> Formula {
        Formula::Eventually { window, body: Box::new(body) }
    }

    /// Signals whose samples are compared by atomic nodes: the subject of every
    /// atom, proposition and proximity predicate plus signal-valued right-hand
    /// sides. Category literals and distance budgets are not included.
    pub fn referenced_signals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom(a) => {
                out.insert(a.signal.clone());
                if let Operand::Signal(s) = &a.rhs {
                    out.insert(s.clone());
                }
            }
            Formula::Prop(s) | Formula::Within { signal: s, .. } => {
                out.insert(s.clone());
            }
            _ => {}
        });
        out
    }

    /// Signal-valued budgets of proximity predicates and windows.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Within { budget: Param::Signal(p), .. } => {
                out.insert(p.clone());
            }
            Formula::Always { window: Some(w), .. } | Formula::Eventually { window: Some(w), .. } => {
                if let Param::Signal(p) = &w.upper {
                    out.insert(p.clone());
                }
            }
            _ => {}
        });
        out
    }

    /// True when some window bound is a distance budget (evaluation then also
    /// needs the ego speed signal).
    pub fn has_distance_window(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| {
            if let Formula::Always { window: Some(w), .. } | Formula::Eventually { window: Some(w), .. } = f {
                found |= matches!(w.upper, Param::Signal(_));
            }
        });
        found
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::Prop(_) | Formula::Within { .. } => 1,
            Formula::Not(x) => 1 + x.depth(),
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Implies(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Always { body, .. } | Formula::Eventually { body, .. } => 1 + body.depth(),
        }
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Not(x) => x.visit(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit(f)),
            Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Always { body, .. } | Formula::Eventually { body, .. } => body.visit(f),
            _ => {}
        }
    }

    fn is_leaf(&self) -> bool {
        matches!(
            self,
            Formula::True | Formula::False | Formula::Atom(_) | Formula::Prop(_) | Formula::Within { .. }
        )
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Const(c) => write!(f, "{c}"),
            Param::Signal(s) => f.write_str(s),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

struct Wrapped<'a>(&'a Formula);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_leaf() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

/// Canonical concrete syntax. Every composite operand is parenthesised, so
/// printing and re-parsing reproduces the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => {
                write!(f, "{} {} ", a.signal, a.cmp.symbol())?;
                match &a.rhs {
                    Operand::Const(c) => write!(f, "{c}"),
                    Operand::Signal(s) | Operand::Category(s) => f.write_str(s),
                }
            }
            Formula::Prop(s) => f.write_str(s),
            Formula::Within { signal, budget } => write!(f, "{signal}({budget})"),
            Formula::Not(x) => write!(f, "not {}", Wrapped(x)),
            Formula::And(xs) | Formula::Or(xs) => {
                let sep = if matches!(self, Formula::And(_)) { " and " } else { " or " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{}", Wrapped(x))?;
                }
                Ok(())
            }
            Formula::Implies(a, b) => write!(f, "{} implies {}", Wrapped(a), Wrapped(b)),
            Formula::Always { window, body } | Formula::Eventually { window, body } => {
                let op = if matches!(self, Formula::Always { .. }) { "G" } else { "F" };
                match window {
                    Some(w) => write!(f, "{op}{w} {}", Wrapped(body)),
                    None => write!(f, "{op} {}", Wrapped(body)),
                }
            }
        }
    }
}
