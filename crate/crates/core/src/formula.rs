//! Target formula language: Boolean structure over program atoms and
//! auxiliary atoms, difference atoms over integer level variables, and
//! pseudo-Boolean sums.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::ast::{Atom, AtomId, Signature};
use crate::error::{Error, Result};

/// Auxiliary atoms. Rule ordinals are 1-based positions within the head's
/// defining rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuxAtom {
    App(AtomId, u32),
    Dep(AtomId, AtomId),
    Gap(AtomId, AtomId),
    Int(AtomId, u32),
    Ext(AtomId, u32),
    Vub(AtomId, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolVar {
    Base(AtomId),
    Aux(AuxAtom),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntVar {
    /// The reference point all level bounds are stated against.
    Z,
    Level(AtomId),
}

/// `lhs - rhs <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffAtom {
    pub lhs: IntVar,
    pub rhs: IntVar,
    pub k: i64,
}

/// Contributes `coeff` when `var` (or its negation) holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbTerm {
    pub coeff: u64,
    pub var: BoolVar,
    pub negated: bool,
}

impl PbTerm {
    pub fn pos(coeff: u64, var: BoolVar) -> Self {
        Self { coeff, var, negated: false }
    }

    pub fn neg(coeff: u64, var: BoolVar) -> Self {
        Self { coeff, var, negated: true }
    }
}

/// `lower <= sum <= upper`. Negative body literals enter as positive
/// coefficients on negated atoms; `shift` is the total weight moved that
/// way, so `bound - shift` is the bound over the signed sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbAtom {
    pub terms: Vec<PbTerm>,
    pub lower: Option<i64>,
    pub upper: Option<i64>,
    pub shift: i64,
}

impl PbAtom {
    pub fn within(&self, sum: i64) -> bool {
        self.lower.is_none_or(|l| sum >= l) && self.upper.is_none_or(|u| sum <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Var(BoolVar),
    Diff(DiffAtom),
    Pb(PbAtom),
    /// Fixes an integer variable to a value.
    Pin(IntVar, i64),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(v: BoolVar) -> Self {
        Formula::Var(v)
    }

    pub fn base(a: AtomId) -> Self {
        Formula::Var(BoolVar::Base(a))
    }

    pub fn aux(a: AuxAtom) -> Self {
        Formula::Var(BoolVar::Aux(a))
    }

    /// `lhs - rhs <= k`; folds to a constant when both sides coincide.
    pub fn diff(lhs: IntVar, rhs: IntVar, k: i64) -> Self {
        if lhs == rhs {
            Formula::Const(0 <= k)
        } else {
            Formula::Diff(DiffAtom { lhs, rhs, k })
        }
    }

    /// Pseudo-Boolean atom; zero-coefficient terms are dropped and an empty
    /// sum folds to a constant.
    pub fn pb(terms: Vec<PbTerm>, lower: Option<i64>, upper: Option<i64>, shift: i64) -> Self {
        assert!(lower.is_some() || upper.is_some(), "pseudo-Boolean atom without bounds");
        let terms: Vec<PbTerm> = terms.into_iter().filter(|t| t.coeff > 0).collect();
        let atom = PbAtom { terms, lower, upper, shift };
        if atom.terms.is_empty() {
            Formula::Const(atom.within(0))
        } else {
            Formula::Pb(atom)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction; a single operand is returned unwrapped.
    pub fn and(mut fs: Vec<Formula>) -> Self {
        if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            Formula::And(fs)
        }
    }

    /// Disjunction; a single operand is returned unwrapped.
    pub fn or(mut fs: Vec<Formula>) -> Self {
        if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            Formula::Or(fs)
        }
    }

    pub fn visit(&self, bools: &mut impl FnMut(BoolVar), ints: &mut impl FnMut(IntVar)) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(v) => bools(*v),
            Formula::Diff(d) => {
                ints(d.lhs);
                ints(d.rhs);
            }
            Formula::Pb(pb) => pb.terms.iter().for_each(|t| bools(t.var)),
            Formula::Pin(v, _) => ints(*v),
            Formula::Not(f) => f.visit(bools, ints),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(bools, ints)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(bools, ints);
                b.visit(bools, ints);
            }
        }
    }

    pub fn bool_vars(&self) -> BTreeSet<BoolVar> {
        let mut out = BTreeSet::new();
        self.visit(
            &mut |v| {
                out.insert(v);
            },
            &mut |_| {},
        );
        out
    }

    pub fn int_vars(&self) -> BTreeSet<IntVar> {
        let mut out = BTreeSet::new();
        self.visit(&mut |_| {}, &mut |v| {
            out.insert(v);
        });
        out
    }

    /// Two-valued evaluation under a complete assignment.
    pub fn eval(&self, m: &DlModel) -> Result<bool> {
        Ok(match self {
            Formula::Const(b) => *b,
            Formula::Var(v) => m.bool(*v)?,
            Formula::Diff(d) => m.int(d.lhs)? - m.int(d.rhs)? <= d.k,
            Formula::Pb(pb) => {
                let mut sum = 0i64;
                for t in &pb.terms {
                    if m.bool(t.var)? != t.negated {
                        sum += t.coeff as i64;
                    }
                }
                pb.within(sum)
            }
            Formula::Pin(v, k) => m.int(*v)? == *k,
            Formula::Not(f) => !f.eval(m)?,
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(m)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(m)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !a.eval(m)? || b.eval(m)?,
            Formula::Iff(a, b) => a.eval(m)? == b.eval(m)?,
        })
    }
}

/// What a formula is for; used for labelling and for filtering families
/// such as the strong ranking constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormulaKind {
    Bounds,
    DepDef,
    GapDef,
    Completion,
    /// `app ↔ int ∨ ext`.
    Split,
    Internal,
    Strong,
    External,
    Reset,
    /// Applicability of a rule in a non-recursive scope.
    Support,
    VubDef,
    VubConstraint,
    Constraint,
    Pin,
    Connect,
}

impl FormulaKind {
    pub fn label(self) -> &'static str {
        match self {
            FormulaKind::Bounds => "bounds",
            FormulaKind::DepDef => "dep",
            FormulaKind::GapDef => "gap",
            FormulaKind::Completion => "completion",
            FormulaKind::Split => "split",
            FormulaKind::Internal => "internal",
            FormulaKind::Strong => "strong",
            FormulaKind::External => "external",
            FormulaKind::Reset => "reset",
            FormulaKind::Support => "support",
            FormulaKind::VubDef => "vub",
            FormulaKind::VubConstraint => "vub-constraint",
            FormulaKind::Constraint => "constraint",
            FormulaKind::Pin => "pin",
            FormulaKind::Connect => "connect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeled {
    pub kind: FormulaKind,
    pub formula: Formula,
}

impl Labeled {
    pub fn new(kind: FormulaKind, formula: Formula) -> Self {
        Self { kind, formula }
    }
}

/// Propositional assignment plus integer values; the models of a formula set.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DlModel {
    pub bools: BTreeMap<BoolVar, bool>,
    pub ints: BTreeMap<IntVar, i64>,
}

impl DlModel {
    pub fn bool(&self, v: BoolVar) -> Result<bool> {
        self.bools.get(&v).copied().ok_or_else(|| Error::Undeclared(format!("{v:?} unassigned")))
    }

    pub fn int(&self, v: IntVar) -> Result<i64> {
        self.ints.get(&v).copied().ok_or_else(|| Error::Undeclared(format!("{v:?} unassigned")))
    }

    /// True base atoms.
    pub fn base_atoms(&self) -> BTreeSet<AtomId> {
        self.bools
            .iter()
            .filter_map(|(v, &b)| match v {
                BoolVar::Base(a) if b => Some(*a),
                _ => None,
            })
            .collect()
    }

    /// Value of the level variable of `a` relative to `z`.
    pub fn level(&self, a: AtomId) -> Option<i64> {
        let z = self.ints.get(&IntVar::Z).copied().unwrap_or(0);
        self.ints.get(&IntVar::Level(a)).map(|x| x - z)
    }
}

/// Symbols that cannot be redeclared in SMT-LIB; base atoms with these
/// names are emitted as quoted symbols.
const SMT_RESERVED: &[&str] = &[
    "and", "or", "xor", "ite", "true", "false", "distinct", "let", "forall", "exists", "as", "par", "match", "abs",
    "div", "mod", "to_real", "to_int", "is_int",
];

/// A set of labelled formulas with the vocabulary they range over.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormulaSet {
    /// Base atom table; `BoolVar::Base(id)` indexes into it.
    pub atoms: Vec<Atom>,
    pub formulas: Vec<Labeled>,
    pub bools: BTreeSet<BoolVar>,
    pub ints: BTreeSet<IntVar>,
}

impl FormulaSet {
    /// Empty set over a program signature, with every atom declared.
    pub fn over(sig: &Signature) -> Self {
        Self {
            atoms: sig.atoms().to_vec(),
            formulas: Vec::new(),
            bools: sig.ids().map(BoolVar::Base).collect(),
            ints: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn declare_bool(&mut self, v: BoolVar) {
        self.bools.insert(v);
    }

    pub fn declare_int(&mut self, v: IntVar) {
        self.ints.insert(v);
    }

    pub fn push(&mut self, kind: FormulaKind, formula: Formula) {
        self.formulas.push(Labeled::new(kind, formula));
    }

    /// Adds the formulas and declarations of `other`, which must share the
    /// base atom table.
    pub fn extend(&mut self, other: FormulaSet) {
        debug_assert_eq!(self.atoms, other.atoms);
        self.formulas.extend(other.formulas);
        self.bools.extend(other.bools);
        self.ints.extend(other.ints);
    }

    pub fn count(&self, kind: FormulaKind) -> usize {
        self.formulas.iter().filter(|l| l.kind == kind).count()
    }

    pub fn without(&self, kind: FormulaKind) -> FormulaSet {
        FormulaSet { formulas: self.formulas.iter().filter(|l| l.kind != kind).cloned().collect(), ..self.clone() }
    }

    /// Level variables other than `z`.
    pub fn level_vars(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.ints.iter().filter_map(|v| match v {
            IntVar::Level(a) => Some(*a),
            IntVar::Z => None,
        })
    }

    pub fn aux_atoms(&self) -> impl Iterator<Item = AuxAtom> + '_ {
        self.bools.iter().filter_map(|v| match v {
            BoolVar::Aux(a) => Some(*a),
            BoolVar::Base(_) => None,
        })
    }

    /// Declaration closure: every variable a formula mentions is declared,
    /// and every atom reference is within the base table.
    pub fn validate(&self) -> Result<()> {
        let in_table = |a: AtomId| a.index() < self.atoms.len();
        let aux_ok = |x: &AuxAtom| match *x {
            AuxAtom::App(a, _) | AuxAtom::Int(a, _) | AuxAtom::Ext(a, _) | AuxAtom::Vub(a, _) => in_table(a),
            AuxAtom::Dep(a, b) | AuxAtom::Gap(a, b) => in_table(a) && in_table(b),
        };
        for v in &self.bools {
            let ok = match v {
                BoolVar::Base(a) => in_table(*a),
                BoolVar::Aux(x) => aux_ok(x),
            };
            if !ok {
                return Err(Error::Undeclared(format!("{v:?} refers outside the atom table")));
            }
        }
        for v in &self.ints {
            if let IntVar::Level(a) = v {
                if !in_table(*a) {
                    return Err(Error::Undeclared(format!("{v:?} refers outside the atom table")));
                }
            }
        }
        for (i, l) in self.formulas.iter().enumerate() {
            for v in l.formula.bool_vars() {
                if !self.bools.contains(&v) {
                    return Err(Error::Undeclared(format!("formula {i} uses `{}`", self.bool_symbol(v))));
                }
            }
            for v in l.formula.int_vars() {
                if !self.ints.contains(&v) {
                    return Err(Error::Undeclared(format!("formula {i} uses `{}`", self.int_symbol(v))));
                }
            }
        }
        Ok(())
    }

    pub fn atom_name(&self, a: AtomId) -> &str {
        &self.atoms[a.index()].name
    }

    pub fn bool_symbol(&self, v: BoolVar) -> String {
        let n = |a: AtomId| self.atoms.get(a.index()).map_or("?", |x| x.name.as_str());
        match v {
            BoolVar::Base(a) => {
                let name = n(a);
                if SMT_RESERVED.contains(&name) {
                    format!("|{name}|")
                } else {
                    name.to_string()
                }
            }
            BoolVar::Aux(AuxAtom::App(a, i)) => format!("__app_{}_{i}", n(a)),
            BoolVar::Aux(AuxAtom::Int(a, i)) => format!("__int_{}_{i}", n(a)),
            BoolVar::Aux(AuxAtom::Ext(a, i)) => format!("__ext_{}_{i}", n(a)),
            BoolVar::Aux(AuxAtom::Vub(a, i)) => format!("__vub_{}_{i}", n(a)),
            BoolVar::Aux(AuxAtom::Dep(a, b)) => format!("__dep_{}__{}", n(a), n(b)),
            BoolVar::Aux(AuxAtom::Gap(a, b)) => format!("__gap_{}__{}", n(a), n(b)),
        }
    }

    pub fn int_symbol(&self, v: IntVar) -> String {
        match v {
            IntVar::Z => "__z".to_string(),
            IntVar::Level(a) => format!("__x_{}", self.atoms.get(a.index()).map_or("?", |x| x.name.as_str())),
        }
    }

    /// S-expression rendering of one formula, using the emitted symbol names.
    pub fn sexpr(&self, f: &Formula) -> String {
        let mut out = String::new();
        self.write_sexpr(&mut out, f);
        out
    }

    fn write_sexpr(&self, out: &mut String, f: &Formula) {
        match f {
            Formula::Const(b) => out.push_str(if *b { "true" } else { "false" }),
            Formula::Var(v) => out.push_str(&self.bool_symbol(*v)),
            Formula::Diff(d) => {
                let _ = write!(out, "(<= (- {} {}) {})", self.int_symbol(d.lhs), self.int_symbol(d.rhs), d.k);
            }
            Formula::Pb(pb) => {
                out.push_str("(pb");
                if let Some(l) = pb.lower {
                    let _ = write!(out, " (>= {l})");
                }
                if let Some(u) = pb.upper {
                    let _ = write!(out, " (<= {u})");
                }
                if pb.shift != 0 {
                    let _ = write!(out, " (shift {})", pb.shift);
                }
                for t in &pb.terms {
                    let s = self.bool_symbol(t.var);
                    if t.negated {
                        let _ = write!(out, " (* {} (not {s}))", t.coeff);
                    } else {
                        let _ = write!(out, " (* {} {s})", t.coeff);
                    }
                }
                out.push(')');
            }
            Formula::Pin(v, k) => {
                let _ = write!(out, "(= {} {k})", self.int_symbol(*v));
            }
            Formula::Not(g) => self.write_op(out, "not", std::slice::from_ref(g.as_ref())),
            Formula::And(fs) => self.write_op(out, "and", fs),
            Formula::Or(fs) => self.write_op(out, "or", fs),
            Formula::Implies(a, b) => self.write_op(out, "=>", &[(**a).clone(), (**b).clone()]),
            Formula::Iff(a, b) => self.write_op(out, "=", &[(**a).clone(), (**b).clone()]),
        }
    }

    fn write_op(&self, out: &mut String, op: &str, args: &[Formula]) {
        out.push('(');
        out.push_str(op);
        for a in args {
            out.push(' ');
            self.write_sexpr(out, a);
        }
        out.push(')');
    }

    /// Line-oriented debug rendering: declarations, then one labelled
    /// formula per line in emission order.
    pub fn to_debug_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FormulaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.bools {
            writeln!(f, "(bool {})", self.bool_symbol(*v))?;
        }
        for v in &self.ints {
            writeln!(f, "(int {})", self.int_symbol(*v))?;
        }
        for l in &self.formulas {
            writeln!(f, "[{}] {}", l.kind.label(), self.sexpr(&l.formula))?;
        }
        Ok(())
    }
}

/// Level bounds for `a` in a scope of `scope_size` atoms: `1 <= x_a <=
/// |S|+1`, with false atoms pushed to `|S|+1`.
pub fn mk_bounds(a: AtomId, scope_size: usize) -> Vec<Labeled> {
    let x = IntVar::Level(a);
    let top = scope_size as i64 + 1;
    vec![
        Labeled::new(FormulaKind::Bounds, Formula::diff(IntVar::Z, x, -1)),
        Labeled::new(FormulaKind::Bounds, Formula::diff(x, IntVar::Z, top)),
        Labeled::new(
            FormulaKind::Bounds,
            Formula::implies(Formula::not(Formula::base(a)), Formula::diff(IntVar::Z, x, -top)),
        ),
    ]
}

/// `dep(a,b) ↔ b ∧ x_b < x_a` and `gap(a,b) ↔ b ∧ x_b < x_a - 1`.
pub fn mk_dep_gap(a: AtomId, b: AtomId) -> Vec<Labeled> {
    let (xa, xb) = (IntVar::Level(a), IntVar::Level(b));
    vec![
        Labeled::new(
            FormulaKind::DepDef,
            Formula::iff(
                Formula::aux(AuxAtom::Dep(a, b)),
                Formula::And(vec![Formula::base(b), Formula::diff(xb, xa, -1)]),
            ),
        ),
        Labeled::new(
            FormulaKind::GapDef,
            Formula::iff(
                Formula::aux(AuxAtom::Gap(a, b)),
                Formula::And(vec![Formula::base(b), Formula::diff(xb, xa, -2)]),
            ),
        ),
    ]
}
