//! Recursive-descent parser for the law formula dialect.
//!
//! ```text
//! formula     = implication ;
//! implication = disjunction [ "implies" implication ] ;
//! disjunction = conjunction { "or" conjunction } ;
//! conjunction = unary { "and" unary } ;
//! unary       = "not" unary | ( "G" | "F" ) [ window ] unary | primary ;
//! window      = "[" number "," ( number | signal ) "]" ;
//! primary     = "(" implication ")" | "{" implication "}" | "true" | "false" | atom ;
//! atom        = signal [ comparator operand | "(" ( number | signal ) ")" ] ;
//! comparator  = ">" | "<" | ">=" | "<=" | "=" | "==" | "!=" | "≠" | "≥" | "≤" ;
//! operand     = number | identifier ;
//! signal      = identifier { "." identifier } ;
//! ```
//!
//! An identifier on the right of `=`/`!=` is a category literal; on the right
//! of an ordering comparator it names a signal.

use thiserror::Error;

use super::ast::{Atom, Comparator, Formula, Operand, Param, Window};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unknown comparator `{0}`")]
    UnknownComparator(String),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("comparator `{0}` is missing its right-hand operand")]
    MissingOperand(&'static str),
    #[error("malformed window: {0}")]
    MalformedWindow(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Cmp(Comparator),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Cmp(c) => format!("`{}`", c.symbol()),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &["G", "F", "not", "and", "or", "implies", "true", "false"];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, kind| ParseError { line, column, kind };

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // line comments
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '≠' => Some(Tok::Cmp(Comparator::Ne)),
            '≥' => Some(Tok::Cmp(Comparator::Ge)),
            '≤' => Some(Tok::Cmp(Comparator::Le)),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: tline, column: tcol });
            i += 1;
            col += 1;
            continue;
        }
        if matches!(c, '<' | '>' | '=' | '!') {
            let start = i;
            while i < chars.len() && matches!(chars[i], '<' | '>' | '=' | '!') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let cmp = match text.as_str() {
                ">" => Comparator::Gt,
                "<" => Comparator::Lt,
                ">=" => Comparator::Ge,
                "<=" => Comparator::Le,
                "=" | "==" => Comparator::Eq,
                "!=" => Comparator::Ne,
                _ => return Err(err(tline, tcol, ParseErrorKind::UnknownComparator(text))),
            };
            out.push(Spanned { tok: Tok::Cmp(cmp), line: tline, column: tcol });
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.'))
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()));
        if starts_number {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = matches!(d, '+' | '-') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value: f64 = text
                .parse()
                .map_err(|_| err(tline, tcol, ParseErrorKind::InvalidNumber(text.clone())))?;
            if !value.is_finite() {
                return Err(err(tline, tcol, ParseErrorKind::InvalidNumber(text)));
            }
            out.push(Spanned { tok: Tok::Num(value), line: tline, column: tcol });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let dotted = d == '.' && chars.get(i + 1).is_some_and(|n| n.is_alphabetic() || *n == '_');
                if d.is_alphanumeric() || d == '_' || dotted {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(text), line: tline, column: tcol });
            continue;
        }
        return Err(err(tline, tcol, ParseErrorKind::UnexpectedChar(c)));
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = self.here();
        ParseError { line: s.line, column: s.column, kind }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        self.error_here(ParseErrorKind::Unexpected { expected, found: self.peek().describe() })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.is_keyword("implies") {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.conjunction()?];
        while self.is_keyword("or") {
            self.bump();
            items.push(self.conjunction()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::Or(items) })
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.unary()?];
        while self.is_keyword("and") {
            self.bump();
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::And(items) })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_keyword("G") || self.is_keyword("F") {
            let always = self.is_keyword("G");
            self.bump();
            let window = if *self.peek() == Tok::LBracket { Some(self.window()?) } else { None };
            let body = self.unary()?;
            return Ok(if always { Formula::always(window, body) } else { Formula::eventually(window, body) });
        }
        self.primary()
    }

    fn window(&mut self) -> Result<Window, ParseError> {
        let open = self.bump();
        let malformed = |msg: String| ParseError {
            line: open.line,
            column: open.column,
            kind: ParseErrorKind::MalformedWindow(msg),
        };
        let lower = match self.bump().tok {
            Tok::Num(n) => n,
            other => return Err(malformed(format!("lower bound must be a number, found {}", other.describe()))),
        };
        if *self.peek() != Tok::Comma {
            return Err(malformed(format!("expected `,`, found {}", self.peek().describe())));
        }
        self.bump();
        let upper = match self.bump().tok {
            Tok::Num(n) => Param::Const(n),
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Param::Signal(s),
            other => return Err(malformed(format!("upper bound must be a number or signal, found {}", other.describe()))),
        };
        if *self.peek() != Tok::RBracket {
            return Err(malformed(format!("expected `]`, found {}", self.peek().describe())));
        }
        self.bump();
        if lower < 0.0 {
            return Err(malformed(format!("negative lower bound {lower}")));
        }
        if let Param::Const(u) = upper {
            if u < lower {
                return Err(malformed(format!("upper bound {u} below lower bound {lower}")));
            }
        }
        Ok(Window { lower, upper })
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::LBrace => {
                self.bump();
                let f = self.implication()?;
                self.expect(Tok::RBrace, "`}`")?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                self.atom(s)
            }
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn atom(&mut self, signal: String) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Cmp(cmp) => {
                let at = self.bump();
                let rhs = match self.peek().clone() {
                    Tok::Num(n) => Operand::Const(n),
                    Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                        if cmp.is_equality() {
                            Operand::Category(s)
                        } else {
                            Operand::Signal(s)
                        }
                    }
                    _ => {
                        return Err(ParseError {
                            line: at.line,
                            column: at.column,
                            kind: ParseErrorKind::MissingOperand(cmp.symbol()),
                        })
                    }
                };
                self.bump();
                Ok(Formula::Atom(Atom { signal, cmp, rhs }))
            }
            Tok::LParen => {
                self.bump();
                let budget = match self.peek().clone() {
                    Tok::Num(n) => Param::Const(n),
                    Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Param::Signal(s),
                    _ => return Err(self.unexpected("a distance budget")),
                };
                self.bump();
                self.expect(Tok::RParen, "`)`")?;
                Ok(Formula::Within { signal, budget })
            }
            _ => Ok(Formula::Prop(signal)),
        }
    }
}

/// Parses a formula in the law dialect.
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let f = p.implication()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_over_atom() {
        let f = parse_formula("G (speed > 5.0)").unwrap();
        assert_eq!(f, Formula::always(None, Formula::atom("speed", Comparator::Gt, 5.0)));
    }

    #[test]
    fn braces_then_implies_bounded_eventually() {
        let f = parse_formula("G { a > 1 and b = red } implies F[0, length] (real_speed > speed)").unwrap();
        let Formula::Implies(lhs, rhs) = f else { panic!("expected implication") };
        assert!(matches!(*lhs, Formula::Always { window: None, .. }));
        match *rhs {
            Formula::Eventually { window: Some(w), body } => {
                assert_eq!(w, Window { lower: 0.0, upper: Param::Signal("length".into()) });
                assert_eq!(
                    *body,
                    Formula::Atom(Atom {
                        signal: "real_speed".into(),
                        cmp: Comparator::Gt,
                        rhs: Operand::Signal("speed".into())
                    })
                );
            }
            other => panic!("unexpected consequent {other:?}"),
        }
    }

    #[test]
    fn dangling_comparator() {
        let e = parse_formula("G (speed >").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingOperand(">"));
        assert_eq!((e.line, e.column), (1, 10));
    }

    #[test]
    fn unknown_comparator() {
        let e = parse_formula("speed => 3").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownComparator("=>".into()));
        assert_eq!(e.column, 7);
    }

    #[test]
    fn malformed_windows() {
        for src in ["G[5, 1] x > 0", "F[-1, 2] x > 0", "G[a, 2] x > 0", "G[0 2] x > 0", "G[0, 2 x > 0"] {
            let e = parse_formula(src).unwrap_err();
            assert!(matches!(e.kind, ParseErrorKind::MalformedWindow(_)), "{src}: {e}");
        }
    }

    #[test]
    fn multiline_positions() {
        let e = parse_formula("G (\n  speed > 1 and\n  ) ").unwrap_err();
        assert_eq!((e.line, e.column), (3, 3));
    }

    #[test]
    fn category_versus_signal_operands() {
        let f = parse_formula("color = red and v >= limit and not flag and d(20)").unwrap();
        let Formula::And(items) = f else { panic!() };
        assert!(matches!(&items[0], Formula::Atom(Atom { rhs: Operand::Category(c), .. }) if c == "red"));
        assert!(matches!(&items[1], Formula::Atom(Atom { rhs: Operand::Signal(s), .. }) if s == "limit"));
        assert!(matches!(&items[2], Formula::Not(x) if **x == Formula::Prop("flag".into())));
        assert!(matches!(&items[3], Formula::Within { budget: Param::Const(c), .. } if *c == 20.0));
    }

    #[test]
    fn implies_is_right_associative() {
        let f = parse_formula("a implies b implies c").unwrap();
        let expected = Formula::implies(
            Formula::Prop("a".into()),
            Formula::implies(Formula::Prop("b".into()), Formula::Prop("c".into())),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn printed_form_reparses() {
        let src = "G { (light.color = red or x.y.color = red) and not p and (s(length) or j(length)) } \
                   implies F[0, length] (real_speed > speed)";
        let f = parse_formula(src).unwrap();
        let printed = f.to_string();
        assert_eq!(parse_formula(&printed).unwrap(), f);
        assert_eq!(parse_formula(&printed).unwrap().to_string(), printed);
    }

    #[test]
    fn trailing_garbage() {
        assert!(parse_formula("x > 1 )").is_err());
        assert!(parse_formula("").is_err());
        assert!(parse_formula("x > 1 @").is_err());
    }
}
