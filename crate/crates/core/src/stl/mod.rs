//! Signal temporal logic for traffic-law clauses: syntax, parsing and
//! quantitative monitoring.

mod ast;
mod corpus;
mod monitor;
mod parser;

pub use ast::{Atom, Comparator, Formula, Operand, Param, Window};
pub use corpus::{builtin_corpus, CorpusError, LawCorpus, LawSpec, BUILTIN_LAWS, CORPUS_SCHEMA_VERSION};
pub use monitor::{robustness, robustness_signal, robustness_with, EvalError, MonitorOptions};
pub use parser::{parse_formula, ParseError, ParseErrorKind};
