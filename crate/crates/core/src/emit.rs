//! SMT-LIB2 serialization of formula sets and parsing of solver models.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;

use crate::error::{Error, Result};
use crate::formula::{BoolVar, DlModel, Formula, FormulaSet, IntVar, PbAtom};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Ask the solver to print its model after `(check-sat)`.
    pub model: bool,
}

/// Renders `fs` as a QF_LIA script. Each pseudo-Boolean sum becomes a
/// `define-fun` so that both of its bounds refer to one term; a top-level
/// two-sided sum is asserted as two separate bounds.
pub fn emit_smtlib(fs: &FormulaSet, opts: EmitOptions) -> Result<String> {
    fs.validate()?;
    let mut e = Emitter { fs, sums: String::new(), next_sum: 0 };
    let mut asserts = String::new();
    for l in &fs.formulas {
        let _ = writeln!(asserts, "; {}", l.kind.label());
        match &l.formula {
            Formula::Pb(pb) if pb.lower.is_some() && pb.upper.is_some() => {
                let sum = e.sum(pb);
                let _ = writeln!(asserts, "(assert (>= {sum} {}))", int_literal(pb.lower.unwrap_or_default()));
                let _ = writeln!(asserts, "(assert (<= {sum} {}))", int_literal(pb.upper.unwrap_or_default()));
            }
            f => {
                let term = e.term(f);
                let _ = writeln!(asserts, "(assert {term})");
            }
        }
    }

    let mut out = String::from("(set-logic QF_LIA)\n");
    for v in &fs.bools {
        let _ = writeln!(out, "(declare-const {} Bool)", fs.bool_symbol(*v));
    }
    let z = fs.int_symbol(IntVar::Z);
    let _ = writeln!(out, "(declare-const {z} Int)");
    for v in fs.ints.iter().filter(|v| **v != IntVar::Z) {
        let _ = writeln!(out, "(declare-const {} Int)", fs.int_symbol(*v));
    }
    let _ = writeln!(out, "(assert (= {z} 0))");
    out.push_str(&e.sums);
    out.push_str(&asserts);
    out.push_str("(check-sat)\n");
    if opts.model {
        out.push_str("(get-model)\n");
    }
    Ok(out)
}

struct Emitter<'a> {
    fs: &'a FormulaSet,
    sums: String,
    next_sum: usize,
}

impl Emitter<'_> {
    /// Defines the sum of `pb` and returns its name.
    fn sum(&mut self, pb: &PbAtom) -> String {
        self.next_sum += 1;
        let name = format!("__sum_{}", self.next_sum);
        let terms: Vec<String> = pb
            .terms
            .iter()
            .map(|t| {
                let v = self.fs.bool_symbol(t.var);
                if t.negated {
                    format!("(ite {v} 0 {})", t.coeff)
                } else {
                    format!("(ite {v} {} 0)", t.coeff)
                }
            })
            .collect();
        let body = match terms.len() {
            0 => "0".to_string(),
            1 => terms[0].clone(),
            _ => format!("(+ {})", terms.join(" ")),
        };
        let _ = writeln!(self.sums, "(define-fun {name} () Int {body})");
        name
    }

    fn term(&mut self, f: &Formula) -> String {
        match f {
            Formula::Const(b) => b.to_string(),
            Formula::Var(v) => self.fs.bool_symbol(*v),
            Formula::Diff(d) => {
                format!("(<= (- {} {}) {})", self.fs.int_symbol(d.lhs), self.fs.int_symbol(d.rhs), int_literal(d.k))
            }
            Formula::Pb(pb) => {
                let sum = self.sum(pb);
                match (pb.lower, pb.upper) {
                    (Some(l), Some(u)) => format!("(and (>= {sum} {}) (<= {sum} {}))", int_literal(l), int_literal(u)),
                    (Some(l), None) => format!("(>= {sum} {})", int_literal(l)),
                    (None, Some(u)) => format!("(<= {sum} {})", int_literal(u)),
                    (None, None) => "true".to_string(),
                }
            }
            Formula::Pin(v, k) => format!("(= {} {})", self.fs.int_symbol(*v), int_literal(*k)),
            Formula::Not(g) => format!("(not {})", self.term(g)),
            Formula::And(fs) if fs.is_empty() => "true".to_string(),
            Formula::Or(fs) if fs.is_empty() => "false".to_string(),
            Formula::And(fs) => self.op("and", fs),
            Formula::Or(fs) => self.op("or", fs),
            Formula::Implies(a, b) => format!("(=> {} {})", self.term(a), self.term(b)),
            Formula::Iff(a, b) => format!("(= {} {})", self.term(a), self.term(b)),
        }
    }

    fn op(&mut self, op: &str, args: &[Formula]) -> String {
        let args: Vec<String> = args.iter().map(|a| self.term(a)).collect();
        format!("({op} {})", args.join(" "))
    }
}

fn int_literal(k: i64) -> String {
    if k < 0 {
        format!("(- {})", k.unsigned_abs())
    } else {
        k.to_string()
    }
}

/// Maps emitted symbol names back to the variables of a formula set.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub bools: BTreeMap<String, BoolVar>,
    pub ints: BTreeMap<String, IntVar>,
}

impl SymbolTable {
    pub fn of(fs: &FormulaSet) -> Self {
        let mut t = SymbolTable::default();
        for v in &fs.bools {
            t.bools.insert(unquote(&fs.bool_symbol(*v)).to_string(), *v);
        }
        t.ints.insert(fs.int_symbol(IntVar::Z), IntVar::Z);
        for v in &fs.ints {
            t.ints.insert(fs.int_symbol(*v), *v);
        }
        t
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('|').and_then(|s| s.strip_suffix('|')).unwrap_or(s)
}

/// Outcome of one solver call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat(DlModel),
    Unsat,
}

/// Parses a solver response: `unsat`, or `sat` followed by a model made of
/// `(define-fun NAME () Bool true|false)` and `(define-fun NAME () Int INT)`
/// entries. Variables the model leaves out get `false` or `0`; symbols not
/// in the formula set are skipped with a warning.
pub fn read_solver_model(text: &str, fs: &FormulaSet) -> Result<SolverAnswer> {
    let table = SymbolTable::of(fs);
    let toks = tokenize(text)?;
    let mut it = toks.into_iter().peekable();
    let err = |line: usize, msg: &str| Error::SolverResponse {
        line,
        text: text.lines().nth(line.saturating_sub(1)).unwrap_or("").trim().to_string(),
        msg: msg.to_string(),
    };
    match it.next() {
        Some(Sexp::Atom(s, _)) if s == "unsat" => return Ok(SolverAnswer::Unsat),
        Some(Sexp::Atom(s, _)) if s == "sat" => {}
        Some(t) => return Err(err(t.line(), "expected `sat` or `unsat`")),
        None => return Err(err(1, "empty solver response")),
    }
    let mut m = DlModel::default();
    for v in &fs.bools {
        m.bools.insert(*v, false);
    }
    m.ints.insert(IntVar::Z, 0);
    for v in &fs.ints {
        m.ints.insert(*v, 0);
    }
    let entries = match it.next() {
        None => return Ok(SolverAnswer::Sat(m)),
        Some(Sexp::List(items, _)) => {
            // older solvers print `(model (define-fun ...) ...)`
            match items.first() {
                Some(Sexp::Atom(s, _)) if s == "model" => items.into_iter().skip(1).collect(),
                _ => items,
            }
        }
        Some(t) => return Err(err(t.line(), "expected a model")),
    };
    if let Some(t) = it.next() {
        return Err(err(t.line(), "unexpected text after the model"));
    }
    for entry in entries {
        let line = entry.line();
        let Sexp::List(parts, _) = entry else {
            return Err(err(line, "expected a model entry"));
        };
        let [Sexp::Atom(kw, _), Sexp::Atom(name, _), Sexp::List(args, _), Sexp::Atom(sort, _), value] = &parts[..]
        else {
            return Err(err(line, "expected `(define-fun NAME () SORT VALUE)`"));
        };
        if kw != "define-fun" || !args.is_empty() {
            return Err(err(line, "expected `(define-fun NAME () SORT VALUE)`"));
        }
        let name = unquote(name);
        match (sort.as_str(), table.bools.get(name), table.ints.get(name)) {
            ("Bool", Some(v), _) => {
                let b = match value {
                    Sexp::Atom(s, _) if s == "true" => true,
                    Sexp::Atom(s, _) if s == "false" => false,
                    _ => return Err(err(line, "expected a Boolean value")),
                };
                m.bools.insert(*v, b);
            }
            ("Int", _, Some(v)) => {
                let k = int_value(value).ok_or_else(|| err(line, "expected an integer value"))?;
                m.ints.insert(*v, k);
            }
            // the sum definitions of the script itself
            _ if name.starts_with("__sum_") => {}
            _ => warn!("ignoring `{name}` of sort {sort} in solver model"),
        }
    }
    Ok(SolverAnswer::Sat(m))
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a, _) => a.parse().ok(),
        Sexp::List(items, _) => match &items[..] {
            [Sexp::Atom(op, _), inner] if op == "-" => int_value(inner).map(|k| -k),
            _ => None,
        },
    }
}

/// S-expression with the line it starts on.
#[derive(Debug)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = vec![(Vec::new(), 1)];
    let mut line = 1;
    let mut chars = text.chars().peekable();
    let unbalanced = |line: usize, msg: &str| Error::SolverResponse {
        line,
        text: text.lines().nth(line.saturating_sub(1)).unwrap_or("").trim().to_string(),
        msg: msg.to_string(),
    };
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            ';' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '(' => stack.push((Vec::new(), line)),
            ')' => {
                let (items, start) =
                    stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| unbalanced(line, "unbalanced `)`"))?;
                stack.last_mut().expect("outer level").0.push(Sexp::List(items, start));
            }
            '|' => {
                let mut s = String::from("|");
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c);
                        }
                        None => return Err(unbalanced(line, "unterminated quoted symbol")),
                    }
                }
                s.push('|');
                stack.last_mut().expect("outer level").0.push(Sexp::Atom(s, line));
            }
            c => {
                let mut s = String::from(c);
                while chars.peek().is_some_and(|&c| !c.is_whitespace() && c != '(' && c != ')' && c != ';') {
                    s.extend(chars.next());
                }
                stack.last_mut().expect("outer level").0.push(Sexp::Atom(s, line));
            }
        }
    }
    if stack.len() != 1 {
        return Err(unbalanced(stack.last().map_or(line, |s| s.1), "unbalanced `(`"));
    }
    Ok(stack.pop().map(|s| s.0).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::AtomId;
    use crate::formula::{FormulaKind, PbTerm};
    use crate::parser::parse_str;
    use crate::toc::{toc_program, TocOptions};

    fn self_loop() -> FormulaSet {
        toc_program(&parse_str("a :- a.").unwrap(), TocOptions::default())
    }

    #[test]
    fn self_loop_declarations() {
        let text = emit_smtlib(&self_loop(), EmitOptions::default()).unwrap();
        assert!(text.starts_with("(set-logic QF_LIA)\n"));
        assert_eq!(text.matches(" Bool)").count(), 4);
        assert_eq!(text.matches(" Int)").count(), 2);
        assert!(text.contains("(declare-const __x_a Int)"));
        assert!(text.contains("(declare-const __dep_a__a Bool)"));
        assert!(text.contains("(assert (= __z 0))"));
        assert!(text.contains("(assert (<= (- __z __x_a) (- 1)))"));
        assert!(text.ends_with("(check-sat)\n"));
        let with_model = emit_smtlib(&self_loop(), EmitOptions { model: true }).unwrap();
        assert!(with_model.ends_with("(check-sat)\n(get-model)\n"));
    }

    #[test]
    fn empty_set() {
        let fs = FormulaSet::default();
        let text = emit_smtlib(&fs, EmitOptions::default()).unwrap();
        assert_eq!(text, "(set-logic QF_LIA)\n(declare-const __z Int)\n(assert (= __z 0))\n(check-sat)\n");
    }

    #[test]
    fn two_sided_sum_is_shared() {
        let p = parse_str("b. c. a :- 1 <= { b = 2, not c = 3 } <= 4.").unwrap();
        let b = BoolVar::Base(p.atom("b").unwrap());
        let c = BoolVar::Base(p.atom("c").unwrap());
        let mut fs = FormulaSet::over(&p.signature);
        fs.push(FormulaKind::Constraint, Formula::pb(vec![PbTerm::pos(2, b), PbTerm::neg(3, c)], Some(1), Some(4), 3));
        let text = emit_smtlib(&fs, EmitOptions::default()).unwrap();
        assert!(text.contains("(define-fun __sum_1 () Int (+ (ite b 2 0) (ite c 0 3)))"));
        assert!(text.contains("(assert (>= __sum_1 1))\n(assert (<= __sum_1 4))"));
        assert_eq!(text.matches("define-fun").count(), 1);
    }

    #[test]
    fn deterministic() {
        let p = parse_str("a :- b. b :- a. {c}. a :- 1 <= { c, b } <= 1.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        assert_eq!(
            emit_smtlib(&fs, EmitOptions::default()).unwrap(),
            emit_smtlib(&fs, EmitOptions::default()).unwrap()
        );
    }

    #[test]
    fn reserved_names_are_quoted() {
        let mut sig = crate::ast::Signature::new();
        sig.intern("abs");
        let mut fs = FormulaSet::over(&sig);
        fs.push(FormulaKind::Constraint, Formula::base(AtomId(0)));
        let text = emit_smtlib(&fs, EmitOptions::default()).unwrap();
        assert!(text.contains("(declare-const |abs| Bool)"));
        let m = read_solver_model("sat\n((define-fun |abs| () Bool true))", &fs).unwrap();
        assert_eq!(
            m,
            SolverAnswer::Sat(DlModel {
                bools: [(BoolVar::Base(AtomId(0)), true)].into(),
                ints: [(IntVar::Z, 0)].into()
            })
        );
    }

    #[test]
    fn undeclared_is_rejected() {
        let mut fs = FormulaSet::default();
        fs.push(FormulaKind::Constraint, Formula::diff(IntVar::Level(AtomId(0)), IntVar::Z, 1));
        assert!(matches!(emit_smtlib(&fs, EmitOptions::default()), Err(Error::Undeclared(_))));
    }

    #[test]
    fn reads_models() {
        let fs = self_loop();
        assert_eq!(read_solver_model("unsat\n", &fs).unwrap(), SolverAnswer::Unsat);
        let text = "sat\n(\n  (define-fun a () Bool\n    false)\n  (define-fun __x_a () Int\n    2)\n  (define-fun __z () Int (- 0))\n  (define-fun mystery () Int (- 1))\n  (define-fun __sum_1 () Int\n    (+ (ite a 1 0) 0))\n)\n";
        let SolverAnswer::Sat(m) = read_solver_model(text, &fs).unwrap() else { panic!() };
        let a = AtomId(0);
        assert_eq!(m.level(a), Some(2));
        assert!(!m.bool(BoolVar::Base(a)).unwrap());
        assert!(crate::dlcheck::satisfies(&fs, &m).unwrap());
    }

    #[test]
    fn negative_integers() {
        let fs = self_loop();
        let SolverAnswer::Sat(m) = read_solver_model("sat\n((define-fun __x_a () Int (- 3)))", &fs).unwrap() else {
            panic!()
        };
        assert_eq!(m.int(IntVar::Level(AtomId(0))).unwrap(), -3);
    }

    #[test]
    fn malformed_responses() {
        let fs = self_loop();
        for (text, line) in [
            ("unknown\n", 1),
            ("", 1),
            ("sat\n((define-fun a () Bool maybe))", 2),
            ("sat\n(\n(define-fun a Bool true))", 3),
            ("sat\n((define-fun a () Bool true)", 2),
            ("sat\n((define-fun __x_a () Int x))", 2),
        ] {
            match read_solver_model(text, &fs) {
                Err(Error::SolverResponse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
