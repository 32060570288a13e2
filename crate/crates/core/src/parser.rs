//! Textual ground-program format (`.lp`).
//!
//! ```text
//! % comment
//! a :- b, not c.
//! {b}.
//! a :- 7 <= { b1=7, b2=5, not c=4 }.
//! a :- 2 <= { b1, b2, b3 } <= 3.
//! :- a, b.
//! #hide b.
//! #atom d.
//! ```

use crate::ast::{Literal, Polarity, Program, Rule, Signature, WeightedLiteral};
use crate::error::{Error, Pos, Result};

/// Program text plus a name used in diagnostics.
#[derive(Debug, Clone)]
pub struct SourceProgram {
    pub text: String,
    pub origin_name: String,
}

impl SourceProgram {
    pub fn new(text: impl Into<String>, origin_name: impl Into<String>) -> Self {
        Self { text: text.into(), origin_name: origin_name.into() }
    }
}

/// Words that cannot be used as atom names.
const RESERVED: &[&str] = &["not"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Directive(String),
    If,
    Dot,
    Comma,
    LBrace,
    RBrace,
    Le,
    Eq,
    Bar,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    line_start: usize,
    origin: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, origin: &'a str) -> Self {
        Self { chars: src.char_indices().peekable(), src, line: 1, line_start: 0, origin }
    }

    fn pos(&self, offset: usize) -> Pos {
        Pos { line: self.line, col: self.src[self.line_start..offset].chars().count() + 1 }
    }

    fn syntax(&self, pos: Pos, msg: impl Into<String>) -> Error {
        Error::Syntax { origin: self.origin.to_string(), pos, msg: msg.into() }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>> {
        let mut out = Vec::new();
        while let Some(&(off, c)) = self.chars.peek() {
            let pos = self.pos(off);
            match c {
                '\n' => {
                    self.chars.next();
                    self.line += 1;
                    self.line_start = off + 1;
                }
                c if c.is_whitespace() => {
                    self.chars.next();
                }
                '%' => {
                    while let Some(&(_, c)) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.chars.next();
                    }
                }
                '.' => {
                    self.chars.next();
                    out.push((Tok::Dot, pos));
                }
                ',' => {
                    self.chars.next();
                    out.push((Tok::Comma, pos));
                }
                '{' => {
                    self.chars.next();
                    out.push((Tok::LBrace, pos));
                }
                '}' => {
                    self.chars.next();
                    out.push((Tok::RBrace, pos));
                }
                '=' => {
                    self.chars.next();
                    out.push((Tok::Eq, pos));
                }
                '|' => {
                    self.chars.next();
                    out.push((Tok::Bar, pos));
                }
                ':' => {
                    self.chars.next();
                    match self.chars.next() {
                        Some((_, '-')) => out.push((Tok::If, pos)),
                        _ => return Err(self.syntax(pos, "expected `:-`")),
                    }
                }
                '<' => {
                    self.chars.next();
                    match self.chars.next() {
                        Some((_, '=')) => out.push((Tok::Le, pos)),
                        _ => return Err(self.syntax(pos, "expected `<=`")),
                    }
                }
                '#' => {
                    self.chars.next();
                    let word = self.word();
                    if word.is_empty() {
                        return Err(self.syntax(pos, "expected a directive name after `#`"));
                    }
                    out.push((Tok::Directive(word), pos));
                }
                '-' | '0'..='9' => {
                    let mut s = String::new();
                    if c == '-' {
                        s.push('-');
                        self.chars.next();
                    }
                    while let Some(&(_, d)) = self.chars.peek() {
                        if !d.is_ascii_digit() {
                            break;
                        }
                        s.push(d);
                        self.chars.next();
                    }
                    let n = s.parse::<i64>().map_err(|_| self.syntax(pos, format!("bad integer `{s}`")))?;
                    out.push((Tok::Int(n), pos));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let word = self.word();
                    out.push((Tok::Ident(word), pos));
                }
                other => return Err(self.syntax(pos, format!("unexpected character `{other}`"))),
            }
        }
        Ok(out)
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if !(c.is_ascii_alphanumeric() || c == '_') {
                break;
            }
            s.push(c);
            self.chars.next();
        }
        s
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    origin: &'a str,
    end: Pos,
    sig: Signature,
    rules: Vec<Rule>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |&(_, p)| p)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn syntax(&self, pos: Pos, msg: impl Into<String>) -> Error {
        Error::Syntax { origin: self.origin.to_string(), pos, msg: msg.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Pos> {
        match self.next() {
            Some((t, p)) if t == want => Ok(p),
            Some((_, p)) => Err(self.syntax(p, format!("expected {what}"))),
            None => Err(self.syntax(self.end, format!("expected {what}, found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<crate::ast::AtomId> {
        match self.next() {
            Some((Tok::Ident(name), p)) => {
                check_identifier(&name).map_err(|msg| self.syntax(p, msg))?;
                Ok(self.sig.intern(&name))
            }
            Some((_, p)) => Err(self.syntax(p, "expected an atom")),
            None => Err(self.syntax(self.end, "expected an atom, found end of input")),
        }
    }

    fn bound(&mut self) -> Result<u64> {
        match self.next() {
            Some((Tok::Int(n), p)) => u64::try_from(n).map_err(|_| Error::Weight {
                origin: self.origin.to_string(),
                pos: p,
                msg: format!("negative bound {n}"),
            }),
            Some((_, p)) => Err(self.syntax(p, "expected an integer")),
            None => Err(self.syntax(self.end, "expected an integer, found end of input")),
        }
    }

    fn program(mut self) -> Result<Program> {
        while self.peek().is_some() {
            self.statement()?;
        }
        let p = Program { rules: self.rules, signature: self.sig };
        p.validate()?;
        Ok(p)
    }

    fn statement(&mut self) -> Result<()> {
        let start = self.pos();
        match self.peek() {
            Some(Tok::Directive(_)) => return self.directive(),
            Some(Tok::Dot) => return Err(self.syntax(start, "empty statement")),
            _ => {}
        }
        let mut head = None;
        let mut choice = false;
        match self.peek() {
            Some(Tok::LBrace) => {
                self.next();
                head = Some(self.ident()?);
                if self.peek() == Some(&Tok::Comma) {
                    return Err(Error::Unsupported {
                        origin: self.origin.to_string(),
                        pos: self.pos(),
                        msg: "choice heads with more than one atom".into(),
                    });
                }
                self.expect(Tok::RBrace, "`}`")?;
                choice = true;
            }
            Some(Tok::Ident(_)) => {
                head = Some(self.ident()?);
                if self.peek() == Some(&Tok::Bar) {
                    return Err(Error::Unsupported {
                        origin: self.origin.to_string(),
                        pos: self.pos(),
                        msg: "disjunctive heads".into(),
                    });
                }
            }
            _ => {}
        }
        let rule = match self.peek() {
            Some(Tok::If) => {
                self.next();
                let body = self.body()?;
                self.assemble(head, choice, body, start)?
            }
            Some(Tok::Dot) if head.is_some() => {
                let h = head.unwrap();
                if choice {
                    Rule::choice(h, &[], &[])
                } else {
                    Rule::fact(h)
                }
            }
            _ => {
                let p = self.pos();
                return Err(self.syntax(p, if head.is_some() { "expected `:-` or `.`" } else { "expected a rule" }));
            }
        };
        self.expect(Tok::Dot, "`.`")?;
        self.rules.push(rule);
        Ok(())
    }

    fn directive(&mut self) -> Result<()> {
        let (name, pos) = match self.next() {
            Some((Tok::Directive(n), p)) => (n, p),
            _ => unreachable!(),
        };
        match name.as_str() {
            "hide" => loop {
                let a = self.ident()?;
                self.sig.set_visible(a, false);
                match self.next() {
                    Some((Tok::Comma, _)) => continue,
                    Some((Tok::Dot, _)) => return Ok(()),
                    Some((_, p)) => return Err(self.syntax(p, "expected `,` or `.`")),
                    None => return Err(self.syntax(self.end, "expected `.`")),
                }
            },
            "atom" => {
                self.ident()?;
                self.expect(Tok::Dot, "`.`")?;
                Ok(())
            }
            other => Err(self.syntax(pos, format!("unknown directive `#{other}`"))),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        if self.peek() == Some(&Tok::Ident("not".into())) {
            self.next();
            if self.peek() == Some(&Tok::Ident("not".into())) {
                let p = self.pos();
                return Err(Error::Unsupported {
                    origin: self.origin.to_string(),
                    pos: p,
                    msg: "double negation in rule bodies".into(),
                });
            }
            return Ok(Literal::neg(self.ident()?));
        }
        Ok(Literal::pos(self.ident()?))
    }

    fn body(&mut self) -> Result<Body> {
        match self.peek() {
            Some(Tok::Int(_)) => {
                let lower = self.bound()?;
                self.expect(Tok::Le, "`<=`")?;
                self.expect(Tok::LBrace, "`{`")?;
                let mut lits = Vec::new();
                let mut explicit = false;
                loop {
                    let lit = self.literal()?;
                    let mut w = 1;
                    if self.peek() == Some(&Tok::Eq) {
                        self.next();
                        explicit = true;
                        let p = self.pos();
                        w = match self.next() {
                            Some((Tok::Int(n), _)) if n >= 0 => n as u64,
                            Some((Tok::Int(n), _)) => {
                                return Err(Error::Weight {
                                    origin: self.origin.to_string(),
                                    pos: p,
                                    msg: format!("negative weight {n}"),
                                })
                            }
                            _ => return Err(self.syntax(p, "expected a weight")),
                        };
                    }
                    lits.push(WeightedLiteral::new(lit, w));
                    match self.next() {
                        Some((Tok::Comma, _)) => continue,
                        Some((Tok::RBrace, _)) => break,
                        Some((_, p)) => return Err(self.syntax(p, "expected `,` or `}`")),
                        None => return Err(self.syntax(self.end, "expected `}`")),
                    }
                }
                let upper = if self.peek() == Some(&Tok::Le) {
                    self.next();
                    Some(self.bound()?)
                } else {
                    None
                };
                Ok(Body::Aggregate { lower, lits, upper, explicit })
            }
            Some(Tok::LBrace) => {
                let p = self.pos();
                Err(self.syntax(p, "aggregate without a lower bound"))
            }
            _ => {
                let mut lits = vec![self.literal()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    lits.push(self.literal()?);
                }
                Ok(Body::Conj(lits))
            }
        }
    }

    fn assemble(&self, head: Option<crate::ast::AtomId>, choice: bool, body: Body, start: Pos) -> Result<Rule> {
        let split = |lits: &[Literal]| {
            let pos: Vec<_> = lits.iter().filter(|l| l.polarity == Polarity::Positive).map(|l| l.atom).collect();
            let neg: Vec<_> = lits.iter().filter(|l| l.polarity == Polarity::Negative).map(|l| l.atom).collect();
            (pos, neg)
        };
        Ok(match (head, body) {
            (None, Body::Conj(lits)) => {
                let body = lits.into_iter().map(WeightedLiteral::unit).collect::<Vec<_>>();
                Rule {
                    head: None,
                    choice: false,
                    lower: body.len() as u64,
                    body,
                    upper: None,
                    origin: crate::ast::Origin::Constraint,
                }
            }
            (None, Body::Aggregate { lower, lits, upper, .. }) => {
                Rule { head: None, choice: false, body: lits, lower, upper, origin: crate::ast::Origin::Constraint }
            }
            (Some(h), Body::Conj(lits)) => {
                let (pos, neg) = split(&lits);
                // keep literal order as written
                let body = lits.into_iter().map(WeightedLiteral::unit).collect::<Vec<_>>();
                let mut r = if choice { Rule::choice(h, &pos, &neg) } else { Rule::normal(h, &pos, &neg) };
                if choice {
                    let nn = *r.body.last().unwrap();
                    r.body = body;
                    r.body.push(nn);
                } else {
                    r.body = body;
                }
                r
            }
            (Some(_), Body::Aggregate { .. }) if choice => {
                return Err(Error::Unsupported {
                    origin: self.origin.to_string(),
                    pos: start,
                    msg: "choice heads with aggregate bodies".into(),
                })
            }
            (Some(h), Body::Aggregate { lower, lits, upper: Some(u), .. }) => Rule::convex(h, lower, u, lits),
            (Some(h), Body::Aggregate { lower, lits, upper: None, explicit: true }) => Rule::weight(h, lower, lits),
            (Some(h), Body::Aggregate { lower, lits, upper: None, explicit: false }) => {
                let lits: Vec<_> = lits.into_iter().map(|l| l.literal).collect();
                Rule::cardinality(h, lower, &lits)
            }
        })
    }
}

enum Body {
    Conj(Vec<Literal>),
    Aggregate { lower: u64, lits: Vec<WeightedLiteral>, upper: Option<u64>, explicit: bool },
}

/// Identifier rule: `[a-z][A-Za-z0-9_]*`, no `__` anywhere, not a keyword.
pub fn check_identifier(name: &str) -> std::result::Result<(), String> {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        Some('_') if name.starts_with("__") => {
            return Err(format!("identifier `{name}` uses the reserved prefix `__`"))
        }
        _ => return Err(format!("identifier `{name}` must start with a lowercase letter")),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid identifier `{name}`"));
    }
    if name.contains("__") {
        return Err(format!("identifier `{name}` contains the reserved separator `__`"));
    }
    if RESERVED.contains(&name) {
        return Err(format!("`{name}` is a keyword"));
    }
    Ok(())
}

pub fn parse_program(src: &SourceProgram) -> Result<Program> {
    let toks = Lexer::new(&src.text, &src.origin_name).tokens()?;
    let end = {
        let line = src.text.lines().count().max(1);
        let col = src.text.lines().last().map_or(0, |l| l.chars().count()) + 1;
        Pos { line, col }
    };
    Parser { toks, at: 0, origin: &src.origin_name, end, sig: Signature::new(), rules: Vec::new() }.program()
}

/// Convenience wrapper for in-memory text.
pub fn parse_str(text: &str) -> Result<Program> {
    parse_program(&SourceProgram::new(text, "<input>"))
}

fn render_literal(p: &Program, l: &Literal) -> String {
    match l.polarity {
        Polarity::Positive => p.name(l.atom).to_string(),
        Polarity::Negative => format!("not {}", p.name(l.atom)),
        Polarity::DoubleNegated => format!("not not {}", p.name(l.atom)),
    }
}

fn render_rule(p: &Program, r: &Rule) -> String {
    use crate::ast::Origin::*;
    let head = match (r.head, r.choice) {
        (Some(h), true) => format!("{{{}}}", p.name(h)),
        (Some(h), false) => p.name(h).to_string(),
        (None, _) => String::new(),
    };
    let lits: Vec<&WeightedLiteral> = r.body.iter().filter(|l| l.literal.polarity != Polarity::DoubleNegated).collect();
    let conj =
        |lits: &[&WeightedLiteral]| lits.iter().map(|l| render_literal(p, &l.literal)).collect::<Vec<_>>().join(", ");
    let body = match r.origin {
        Fact => None,
        Choice if lits.is_empty() => None,
        Normal | Choice => Some(conj(&lits)),
        Constraint if r.is_conjunctive() && !lits.is_empty() => Some(conj(&lits)),
        Cardinality => Some(format!("{} <= {{ {} }}", r.lower, conj(&lits))),
        Weight | Constraint | Convex => {
            let inner = lits
                .iter()
                .map(|l| format!("{}={}", render_literal(p, &l.literal), l.weight))
                .collect::<Vec<_>>()
                .join(", ");
            let upper = r.upper.map(|u| format!(" <= {u}")).unwrap_or_default();
            Some(format!("{} <= {{ {} }}{}", r.lower, inner, upper))
        }
    };
    match body {
        None => format!("{head}."),
        Some(b) if head.is_empty() => format!(":- {b}."),
        Some(b) => format!("{head} :- {b}."),
    }
}

/// Renders a program in the textual format; parsing the result yields an
/// identical program.
pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    // the parser numbers atoms by first mention; declare them up front when
    // the rules alone would number them differently
    let mut first_mention = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for a in p.rules.iter().flat_map(|r| r.atoms_in_text_order()) {
        if seen.insert(a) {
            first_mention.push(a);
        }
    }
    if first_mention != p.signature.ids().collect::<Vec<_>>() {
        for a in p.signature.ids() {
            out.push_str(&format!("#atom {}.\n", p.name(a)));
        }
    }
    for r in &p.rules {
        out.push_str(&render_rule(p, r));
        out.push('\n');
    }
    let hidden: Vec<&str> = p.signature.ids().filter(|&a| !p.signature.get(a).visible).map(|a| p.name(a)).collect();
    if !hidden.is_empty() {
        out.push_str(&format!("#hide {}.\n", hidden.join(", ")));
    }
    out
}

impl Rule {
    /// Atoms in the order the parser meets them when reading `render_rule`.
    fn atoms_in_text_order(&self) -> impl Iterator<Item = crate::ast::AtomId> + '_ {
        self.head
            .into_iter()
            .chain(self.body.iter().filter(|l| l.literal.polarity != Polarity::DoubleNegated).map(|l| l.literal.atom))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Origin;

    #[test]
    fn normal_rule() {
        let p = parse_str("a :- b, not c.").unwrap();
        let r = &p.rules[0];
        assert_eq!(r.origin, Origin::Normal);
        assert_eq!(r.positive_atoms().collect::<Vec<_>>(), vec![p.atom("b").unwrap()]);
        assert_eq!(r.negative_literals().map(|l| l.literal.atom).collect::<Vec<_>>(), vec![p.atom("c").unwrap()]);
        assert_eq!(r.lower, 2);
    }

    #[test]
    fn weight_rule_of_example_six() {
        let p = parse_str("a :- 7 <= { b1=7, b2=5, b3=3, b4=2, b5=1 }.").unwrap();
        let r = &p.rules[0];
        assert_eq!(r.origin, Origin::Weight);
        assert_eq!(r.lower, 7);
        assert_eq!(r.body.iter().map(|l| l.weight).collect::<Vec<_>>(), vec![7, 5, 3, 2, 1]);
    }

    #[test]
    fn convex_rule() {
        let p = parse_str("a :- 2 <= { b1, b2, b3, b4 } <= 3.").unwrap();
        let r = &p.rules[0];
        assert_eq!(r.origin, Origin::Convex);
        assert_eq!((r.lower, r.upper), (2, Some(3)));
        assert!(r.body.iter().all(|l| l.weight == 1));
    }

    #[test]
    fn directives_and_comments() {
        let p = parse_str("% hello\n#atom d.\na :- b. % trailing\n#hide b, d.\n").unwrap();
        assert_eq!(p.signature.len(), 3);
        assert!(!p.signature.get(p.atom("b").unwrap()).visible);
        assert!(!p.signature.get(p.atom("d").unwrap()).visible);
        assert!(p.signature.get(p.atom("a").unwrap()).visible);
    }

    #[test]
    fn choice_and_constraint() {
        let p = parse_str("{a}.\n{b} :- a.\n:- a, not b.\n:- 1 <= { a, b } <= 1.").unwrap();
        assert_eq!(p.rules[0].origin, Origin::Choice);
        assert_eq!(p.rules[0].lower, 1);
        assert_eq!(p.rules[1].lower, 2);
        assert_eq!(p.rules[2].origin, Origin::Constraint);
        assert_eq!(p.rules[3].upper, Some(1));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(parse_str("a :- 2 <= { b=-1 }."), Err(Error::Weight { .. })));
        assert!(matches!(parse_str("a | b :- c."), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_str("a :- { b } <= 2."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_str("a :- b"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_str("__a :- b."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_str("a__b :- b."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_str("A :- b."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_str("{a} :- 1 <= { b }."), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_str("a :- not not b."), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn error_position() {
        match parse_str("a :- b.\nc :- d e.") {
            Err(Error::Syntax { pos, .. }) => assert_eq!((pos.line, pos.col), (2, 8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_program_renders_empty() {
        let p = parse_str("").unwrap();
        assert_eq!(render_program(&p), "");
    }

    #[test]
    fn example_one_round_trips() {
        let text = "{b1}.\n{b2}.\n{b3}.\na :- 1 <= { b1, b2, b3 }.\n";
        let p = parse_str(text).unwrap();
        assert_eq!(render_program(&p), text);
        assert_eq!(parse_str(&render_program(&p)).unwrap(), p);
    }

    #[test]
    fn hidden_atoms_round_trip() {
        let p = parse_str("a :- b.\n#hide b.\n#atom z.").unwrap();
        let q = parse_str(&render_program(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn declared_atom_before_use_round_trips() {
        let p = parse_str("#atom z.\na :- z, b.").unwrap();
        assert_eq!(parse_str(&render_program(&p)).unwrap(), p);
    }
}
