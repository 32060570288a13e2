//! Exact bounded model finder for formula sets.
//!
//! Propositional atoms and level variables are enumerated by backtracking.
//! Level variables range over the bounds the formula set itself asserts
//! against `z`, with `z` pinned. An auxiliary atom defined by a top-level
//! equivalence `aux ↔ φ` is not guessed: its value is read off `φ`, which
//! is exactly the value every model must give it. Partial assignments are
//! pruned with a three-valued evaluation in which unassigned level
//! variables stand for their whole interval, so pruning never loses a
//! model. Every model found is re-checked with the plain two-valued
//! evaluator of the formula IR.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{AtomId, Interpretation};
use crate::error::{Error, Result};
use crate::formula::{BoolVar, DlModel, Formula, FormulaSet, IntVar};

/// Limit on guessed propositional atoms.
pub const MAX_ENUMERATED_ATOMS: usize = 22;

/// Values fixed before enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Restriction {
    pub bools: BTreeMap<BoolVar, bool>,
    pub ints: BTreeMap<IntVar, i64>,
}

impl Restriction {
    /// Fixes the base atoms of `fs` to exactly `true_atoms`.
    pub fn base(fs: &FormulaSet, true_atoms: &BTreeSet<AtomId>) -> Self {
        let bools = fs
            .bools
            .iter()
            .filter_map(|v| match v {
                BoolVar::Base(a) => Some((*v, true_atoms.contains(a))),
                BoolVar::Aux(_) => None,
            })
            .collect();
        Self { bools, ints: BTreeMap::new() }
    }

    pub fn with_level(mut self, a: AtomId, value: i64) -> Self {
        self.ints.insert(IntVar::Level(a), value);
        self
    }
}

pub fn enumerate_dl_models(fs: &FormulaSet) -> Result<Vec<DlModel>> {
    enumerate_dl_models_with(fs, &Restriction::default())
}

pub fn enumerate_dl_models_with(fs: &FormulaSet, restriction: &Restriction) -> Result<Vec<DlModel>> {
    let search = Search::compile(fs, restriction)?;
    let mut models = Vec::new();
    search.run(&mut models)?;
    models.sort();
    Ok(models)
}

/// Whether `m` satisfies every formula of `fs`, by direct evaluation.
pub fn satisfies(fs: &FormulaSet, m: &DlModel) -> Result<bool> {
    for l in &fs.formulas {
        if !l.formula.eval(m)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Visible projections, one per model, duplicates kept.
pub fn project_models(models: &[DlModel], visible: &BTreeSet<AtomId>) -> Vec<Interpretation> {
    models.iter().map(|m| m.base_atoms().intersection(visible).copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoolRef {
    Guess(usize),
    Defined(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IntRef {
    Z,
    Var(usize),
}

#[derive(Debug, Clone)]
enum Node {
    Const(bool),
    Bool(BoolRef),
    Diff(IntRef, IntRef, i64),
    Pb(Vec<(i64, BoolRef, bool)>, Option<i64>, Option<i64>),
    Pin(IntRef, i64),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Iff(Box<Node>, Box<Node>),
}

struct Search<'a> {
    fs: &'a FormulaSet,
    z: i64,
    guessed: Vec<BoolVar>,
    defined: Vec<BoolVar>,
    definitions: Vec<Node>,
    ints: Vec<IntVar>,
    domains: Vec<(i64, i64)>,
    bool_fixed: Vec<Option<bool>>,
    /// Restrictions on defined atoms, checked on complete assignments.
    defined_fixed: Vec<(usize, bool)>,
    formulas: Vec<Node>,
    /// Formulas to re-evaluate after assigning guessed atom `i`.
    bool_watch: Vec<Vec<usize>>,
    int_watch: Vec<Vec<usize>>,
    /// Formulas that mention no enumerated variable.
    closed: Vec<usize>,
}

#[derive(Clone)]
struct State {
    bools: Vec<Option<bool>>,
    ints: Vec<(i64, i64)>,
}

impl<'a> Search<'a> {
    fn compile(fs: &'a FormulaSet, restriction: &Restriction) -> Result<Self> {
        fs.validate()?;
        let mut z = 0;
        for l in &fs.formulas {
            if let Formula::Pin(IntVar::Z, v) = l.formula {
                z = v;
            }
        }

        // definitions, skipping any that would be circular
        let mut defs: BTreeMap<BoolVar, &Formula> = BTreeMap::new();
        let mut def_order: Vec<BoolVar> = Vec::new();
        for l in &fs.formulas {
            if let Formula::Iff(lhs, rhs) = &l.formula {
                if let Formula::Var(v @ BoolVar::Aux(_)) = **lhs {
                    if !defs.contains_key(&v) && !depends_on(rhs, v, &defs) {
                        defs.insert(v, rhs);
                        def_order.push(v);
                    }
                }
            }
        }
        let def_order = topological(&def_order, &defs);
        let guessed: Vec<BoolVar> = fs.bools.iter().copied().filter(|v| !defs.contains_key(v)).collect();
        if guessed.len() > MAX_ENUMERATED_ATOMS {
            return Err(Error::Resource {
                what: "enumerated propositional atoms",
                limit: MAX_ENUMERATED_ATOMS,
                actual: guessed.len(),
            });
        }
        let guess_index: BTreeMap<BoolVar, usize> = guessed.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let def_index: BTreeMap<BoolVar, usize> = def_order.iter().enumerate().map(|(i, v)| (*v, i)).collect();

        let ints: Vec<IntVar> = fs.ints.iter().copied().filter(|v| *v != IntVar::Z).collect();
        let int_index: BTreeMap<IntVar, usize> = ints.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut lower: BTreeMap<IntVar, i64> = BTreeMap::new();
        let mut upper: BTreeMap<IntVar, i64> = BTreeMap::new();
        for l in &fs.formulas {
            if let Formula::Diff(d) = l.formula {
                match (d.lhs, d.rhs) {
                    // z - x <= k
                    (IntVar::Z, x) => {
                        let lo = z - d.k;
                        lower.entry(x).and_modify(|v| *v = (*v).max(lo)).or_insert(lo);
                    }
                    // x - z <= k
                    (x, IntVar::Z) => {
                        let hi = z + d.k;
                        upper.entry(x).and_modify(|v| *v = (*v).min(hi)).or_insert(hi);
                    }
                    _ => {}
                }
            }
        }
        let mut domains = Vec::with_capacity(ints.len());
        for v in &ints {
            let (Some(&lo), Some(&hi)) = (lower.get(v), upper.get(v)) else {
                return Err(Error::Unbounded(fs.int_symbol(*v)));
            };
            let (lo, hi) = match restriction.ints.get(v) {
                Some(&k) => (k.max(lo), k.min(hi)),
                None => (lo, hi),
            };
            domains.push((lo, hi));
        }

        let mut bool_fixed = vec![None; guessed.len()];
        let mut defined_fixed = Vec::new();
        for (v, &b) in &restriction.bools {
            if let Some(&i) = guess_index.get(v) {
                bool_fixed[i] = Some(b);
            } else if let Some(&i) = def_index.get(v) {
                defined_fixed.push((i, b));
            } else {
                return Err(Error::Undeclared(format!("restricted atom `{}`", fs.bool_symbol(*v))));
            }
        }

        let cx = Compiler { guess_index: &guess_index, def_index: &def_index, int_index: &int_index };
        let definitions: Vec<Node> = def_order.iter().map(|v| cx.node(defs[v])).collect();
        let formulas: Vec<Node> = fs.formulas.iter().map(|l| cx.node(&l.formula)).collect();

        // which enumerated variables each definition and formula reaches
        let mut def_reach: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = Vec::with_capacity(definitions.len());
        for d in &definitions {
            let mut reach = (BTreeSet::new(), BTreeSet::new());
            collect(d, &def_reach, &mut reach);
            def_reach.push(reach);
        }
        let mut bool_watch = vec![Vec::new(); guessed.len()];
        let mut int_watch = vec![Vec::new(); ints.len()];
        let mut closed = Vec::new();
        for (fi, f) in formulas.iter().enumerate() {
            let mut reach = (BTreeSet::new(), BTreeSet::new());
            collect(f, &def_reach, &mut reach);
            if reach.0.is_empty() && reach.1.is_empty() {
                closed.push(fi);
            }
            for b in reach.0 {
                bool_watch[b].push(fi);
            }
            for i in reach.1 {
                int_watch[i].push(fi);
            }
        }

        Ok(Self {
            fs,
            z,
            guessed,
            defined: def_order,
            definitions,
            ints,
            domains,
            bool_fixed,
            defined_fixed,
            formulas,
            bool_watch,
            int_watch,
            closed,
        })
    }

    fn run(&self, out: &mut Vec<DlModel>) -> Result<()> {
        if self.domains.iter().any(|(lo, hi)| lo > hi) {
            return Ok(());
        }
        let mut state = State { bools: vec![None; self.guessed.len()], ints: self.domains.clone() };
        if self.closed.iter().any(|&f| self.eval(&self.formulas[f], &state) == Some(false)) {
            return Ok(());
        }
        self.step(0, &mut state, out)
    }

    /// Assigns variable `k`: guessed atoms first, then level variables.
    fn step(&self, k: usize, state: &mut State, out: &mut Vec<DlModel>) -> Result<()> {
        let nb = self.guessed.len();
        if k == nb + self.ints.len() {
            return self.emit(state, out);
        }
        if k < nb {
            let values: &[bool] = match self.bool_fixed[k] {
                Some(true) => &[true],
                Some(false) => &[false],
                None => &[false, true],
            };
            for &b in values {
                state.bools[k] = Some(b);
                if self.consistent(&self.bool_watch[k], state) {
                    self.step(k + 1, state, out)?;
                }
            }
            state.bools[k] = None;
        } else {
            let i = k - nb;
            let (lo, hi) = self.domains[i];
            for v in lo..=hi {
                state.ints[i] = (v, v);
                if self.consistent(&self.int_watch[i], state) {
                    self.step(k + 1, state, out)?;
                }
            }
            state.ints[i] = (lo, hi);
        }
        Ok(())
    }

    fn consistent(&self, watch: &[usize], state: &State) -> bool {
        watch.iter().all(|&f| self.eval(&self.formulas[f], state) != Some(false))
    }

    fn emit(&self, state: &State, out: &mut Vec<DlModel>) -> Result<()> {
        let defined: Vec<bool> = (0..self.defined.len())
            .map(|i| self.eval(&self.definitions[i], state).expect("complete assignment"))
            .collect();
        if self.defined_fixed.iter().any(|&(i, b)| defined[i] != b) {
            return Ok(());
        }
        let mut m = DlModel::default();
        for (i, v) in self.guessed.iter().enumerate() {
            m.bools.insert(*v, state.bools[i].expect("complete assignment"));
        }
        for (i, v) in self.defined.iter().enumerate() {
            m.bools.insert(*v, defined[i]);
        }
        if self.fs.ints.contains(&IntVar::Z) {
            m.ints.insert(IntVar::Z, self.z);
        }
        for (i, v) in self.ints.iter().enumerate() {
            m.ints.insert(*v, state.ints[i].0);
        }
        if !satisfies(self.fs, &m)? {
            return Err(Error::invalid("model finder produced an assignment the evaluator rejects"));
        }
        out.push(m);
        Ok(())
    }

    fn bool_value(&self, r: BoolRef, state: &State) -> Option<bool> {
        match r {
            BoolRef::Guess(i) => state.bools[i],
            BoolRef::Defined(i) => self.eval(&self.definitions[i], state),
        }
    }

    fn range(&self, r: IntRef, state: &State) -> (i64, i64) {
        match r {
            IntRef::Z => (self.z, self.z),
            IntRef::Var(i) => state.ints[i],
        }
    }

    /// Kleene evaluation; `None` is unknown.
    fn eval(&self, n: &Node, state: &State) -> Option<bool> {
        match n {
            Node::Const(b) => Some(*b),
            Node::Bool(r) => self.bool_value(*r, state),
            Node::Diff(l, r, k) => {
                let (l_lo, l_hi) = self.range(*l, state);
                let (r_lo, r_hi) = self.range(*r, state);
                if l_hi - r_lo <= *k {
                    Some(true)
                } else if l_lo - r_hi > *k {
                    Some(false)
                } else {
                    None
                }
            }
            Node::Pb(terms, lower, upper) => {
                let (mut lo, mut hi) = (0i64, 0i64);
                for &(c, r, negated) in terms {
                    match self.bool_value(r, state) {
                        Some(b) if b != negated => {
                            lo += c;
                            hi += c;
                        }
                        Some(_) => {}
                        None => hi += c,
                    }
                }
                let mut result = Some(true);
                if let Some(l) = *lower {
                    if hi < l {
                        return Some(false);
                    }
                    if lo < l {
                        result = None;
                    }
                }
                if let Some(u) = *upper {
                    if lo > u {
                        return Some(false);
                    }
                    if hi > u {
                        result = None;
                    }
                }
                result
            }
            Node::Pin(r, k) => {
                let (lo, hi) = self.range(*r, state);
                if lo == hi {
                    Some(lo == *k)
                } else if *k < lo || *k > hi {
                    Some(false)
                } else {
                    None
                }
            }
            Node::Not(f) => self.eval(f, state).map(|b| !b),
            Node::And(fs) => {
                let mut result = Some(true);
                for f in fs {
                    match self.eval(f, state) {
                        Some(false) => return Some(false),
                        None => result = None,
                        Some(true) => {}
                    }
                }
                result
            }
            Node::Or(fs) => {
                let mut result = Some(false);
                for f in fs {
                    match self.eval(f, state) {
                        Some(true) => return Some(true),
                        None => result = None,
                        Some(false) => {}
                    }
                }
                result
            }
            Node::Implies(a, b) => match (self.eval(a, state), self.eval(b, state)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
            Node::Iff(a, b) => match (self.eval(a, state), self.eval(b, state)) {
                (Some(x), Some(y)) => Some(x == y),
                _ => None,
            },
        }
    }
}

/// Orders definitions so that each comes after the definitions it uses.
fn topological(order: &[BoolVar], defs: &BTreeMap<BoolVar, &Formula>) -> Vec<BoolVar> {
    fn visit(v: BoolVar, defs: &BTreeMap<BoolVar, &Formula>, done: &mut BTreeSet<BoolVar>, out: &mut Vec<BoolVar>) {
        if !done.insert(v) {
            return;
        }
        if let Some(d) = defs.get(&v) {
            for w in d.bool_vars() {
                if defs.contains_key(&w) {
                    visit(w, defs, done, out);
                }
            }
            out.push(v);
        }
    }
    let mut done = BTreeSet::new();
    let mut out = Vec::with_capacity(order.len());
    for &v in order {
        visit(v, defs, &mut done, &mut out);
    }
    out
}

/// Whether `f` mentions `v`, looking through the given definitions.
fn depends_on(f: &Formula, v: BoolVar, defs: &BTreeMap<BoolVar, &Formula>) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<BoolVar> = f.bool_vars().into_iter().collect();
    while let Some(w) = stack.pop() {
        if w == v {
            return true;
        }
        if seen.insert(w) {
            if let Some(d) = defs.get(&w) {
                stack.extend(d.bool_vars());
            }
        }
    }
    false
}

struct Compiler<'c> {
    guess_index: &'c BTreeMap<BoolVar, usize>,
    def_index: &'c BTreeMap<BoolVar, usize>,
    int_index: &'c BTreeMap<IntVar, usize>,
}

impl Compiler<'_> {
    fn bool_ref(&self, v: BoolVar) -> BoolRef {
        match self.guess_index.get(&v) {
            Some(&i) => BoolRef::Guess(i),
            None => BoolRef::Defined(self.def_index[&v]),
        }
    }

    fn int_ref(&self, v: IntVar) -> IntRef {
        match v {
            IntVar::Z => IntRef::Z,
            v => IntRef::Var(self.int_index[&v]),
        }
    }

    fn node(&self, f: &Formula) -> Node {
        match f {
            Formula::Const(b) => Node::Const(*b),
            Formula::Var(v) => Node::Bool(self.bool_ref(*v)),
            Formula::Diff(d) => Node::Diff(self.int_ref(d.lhs), self.int_ref(d.rhs), d.k),
            Formula::Pb(pb) => Node::Pb(
                pb.terms.iter().map(|t| (t.coeff as i64, self.bool_ref(t.var), t.negated)).collect(),
                pb.lower,
                pb.upper,
            ),
            Formula::Pin(v, k) => Node::Pin(self.int_ref(*v), *k),
            Formula::Not(g) => Node::Not(Box::new(self.node(g))),
            Formula::And(fs) => Node::And(fs.iter().map(|g| self.node(g)).collect()),
            Formula::Or(fs) => Node::Or(fs.iter().map(|g| self.node(g)).collect()),
            Formula::Implies(a, b) => Node::Implies(Box::new(self.node(a)), Box::new(self.node(b))),
            Formula::Iff(a, b) => Node::Iff(Box::new(self.node(a)), Box::new(self.node(b))),
        }
    }
}

/// Guessed atoms and level variables reachable from `n`.
fn collect(n: &Node, defs: &[(BTreeSet<usize>, BTreeSet<usize>)], out: &mut (BTreeSet<usize>, BTreeSet<usize>)) {
    let bool_ref = |r: &BoolRef, out: &mut (BTreeSet<usize>, BTreeSet<usize>)| match *r {
        BoolRef::Guess(i) => {
            out.0.insert(i);
        }
        BoolRef::Defined(i) => {
            out.0.extend(&defs[i].0);
            out.1.extend(&defs[i].1);
        }
    };
    let int_ref = |r: &IntRef, out: &mut (BTreeSet<usize>, BTreeSet<usize>)| {
        if let IntRef::Var(i) = *r {
            out.1.insert(i);
        }
    };
    match n {
        Node::Const(_) => {}
        Node::Bool(r) => bool_ref(r, out),
        Node::Diff(l, r, _) => {
            int_ref(l, out);
            int_ref(r, out);
        }
        Node::Pb(terms, _, _) => terms.iter().for_each(|(_, r, _)| bool_ref(r, out)),
        Node::Pin(r, _) => int_ref(r, out),
        Node::Not(f) => collect(f, defs, out),
        Node::And(fs) | Node::Or(fs) => fs.iter().for_each(|f| collect(f, defs, out)),
        Node::Implies(a, b) | Node::Iff(a, b) => {
            collect(a, defs, out);
            collect(b, defs, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{FormulaKind, PbTerm};
    use crate::parser::parse_str;
    use crate::toc::{toc_program, TocOptions};

    #[test]
    fn self_loop_has_one_model() {
        let p = parse_str("a :- a.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        let ms = enumerate_dl_models(&fs).unwrap();
        assert_eq!(ms.len(), 1);
        let a = p.atom("a").unwrap();
        assert!(!ms[0].bool(BoolVar::Base(a)).unwrap());
        assert_eq!(ms[0].level(a), Some(2));
        assert!(ms[0].bools.values().all(|b| !b));
        let proj = project_models(&ms, &p.signature.visible_ids());
        assert_eq!(proj, vec![Interpretation::new()]);
    }

    #[test]
    fn fact_has_one_model() {
        let p = parse_str("a.").unwrap();
        let ms = enumerate_dl_models(&toc_program(&p, TocOptions::default())).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].base_atoms().len(), 1);
    }

    #[test]
    fn empty_projection_keeps_multiplicity() {
        let p = parse_str("{a}. {b}.").unwrap();
        let ms = enumerate_dl_models(&toc_program(&p, TocOptions::default())).unwrap();
        assert_eq!(ms.len(), 4);
        assert_eq!(project_models(&ms, &BTreeSet::new()), vec![Interpretation::new(); 4]);
    }

    #[test]
    fn unbounded_level_is_rejected() {
        let mut sig = crate::ast::Signature::new();
        let a = sig.intern("a");
        let mut fs = FormulaSet::over(&sig);
        fs.declare_int(IntVar::Z);
        fs.declare_int(IntVar::Level(a));
        fs.push(FormulaKind::Bounds, Formula::diff(IntVar::Z, IntVar::Level(a), -1));
        assert!(matches!(enumerate_dl_models(&fs), Err(Error::Unbounded(_))));
    }

    #[test]
    fn restriction_on_levels() {
        let p = parse_str("a :- b. b :- a. a :- c. c.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        let (a, b) = (p.atom("a").unwrap(), p.atom("b").unwrap());
        let ms = enumerate_dl_models(&fs).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!((ms[0].level(a), ms[0].level(b)), (Some(1), Some(2)));
        let r = Restriction::default().with_level(a, 2);
        assert!(enumerate_dl_models_with(&fs, &r).unwrap().is_empty());
    }

    #[test]
    fn pb_bounds_in_search() {
        let mut sig = crate::ast::Signature::new();
        let ids: Vec<_> = ["p", "q", "r"].iter().map(|n| sig.intern(n)).collect();
        let mut fs = FormulaSet::over(&sig);
        let terms = ids.iter().map(|&a| PbTerm::pos(1, BoolVar::Base(a))).collect();
        fs.push(FormulaKind::Constraint, Formula::pb(terms, Some(1), Some(2), 0));
        assert_eq!(enumerate_dl_models(&fs).unwrap().len(), 6);
    }

    #[test]
    fn too_many_guessed_atoms() {
        let mut sig = crate::ast::Signature::new();
        for i in 0..23 {
            sig.intern(&format!("p{i}"));
        }
        let fs = FormulaSet::over(&sig);
        assert!(matches!(enumerate_dl_models(&fs), Err(Error::Resource { .. })));
    }
}
