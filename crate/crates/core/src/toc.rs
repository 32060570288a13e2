//! Tight ordered completion: per-SCC translation of weight-constraint
//! programs into difference-logic formulas with pseudo-Boolean atoms.
//!
//! Every rule is read in its generalized weight form `l <= body <= u`. In a
//! recursive scope the body is split into the internal part (positive atoms
//! of the scope, read through `dep`/`gap`) and the external part (positive
//! atoms outside the scope plus negative and double-negated literals, read
//! through their truth values). Which of `int`/`ext` can be non-trivial is
//! decided per rule:
//!
//! * no internal weight: the rule can only justify its head externally, so
//!   `app` is defined from the external sum and resets the head's level;
//! * external weight below the bound: the rule can only justify internally,
//!   so `app` is the internal sum and carries the strong constraint;
//! * otherwise both atoms are introduced with the split `app ↔ int ∨ ext`.
//!
//! Upper bounds are checked against the actual truth values of all body
//! literals, never against the `dep`-substituted sum.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{AtomId, Origin, Polarity, Program, Rule};
use crate::depgraph::{build_depgraph, is_recursive, module_unchecked, sccs, DepGraph, SccPartition};
use crate::error::{Error, Result};
use crate::formula::{mk_bounds, mk_dep_gap, AuxAtom, BoolVar, Formula, FormulaKind, FormulaSet, IntVar, PbTerm};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TocOptions {
    /// Leave out the strong ranking constraints (weak ordered completion).
    pub no_strong: bool,
    /// Check upper bounds through `vub` atoms and an integrity constraint
    /// instead of an upper-bounded sum.
    pub vub_form: bool,
    /// Encode purely positive aggregate rules with at most
    /// [`MAX_EXTENSIONAL_ATOMS`] atoms through their satisfier families.
    pub extensional: bool,
}

/// Limit on body atoms for extensional aggregates and subset normalization.
pub const MAX_EXTENSIONAL_ATOMS: usize = 6;

/// Whole-program translation: the union of all module translations in
/// dependency order, the integrity constraints, and `z = 0`.
pub fn toc_program(p: &Program, opts: TocOptions) -> FormulaSet {
    let g = build_depgraph(p);
    let parts = sccs(&g, p);
    let mut fs = FormulaSet::over(&p.signature);
    fs.declare_int(IntVar::Z);
    for scope in &parts.components {
        fs.extend(module_formulas(p, &g, scope, opts));
    }
    for r in p.constraints() {
        fs.push(FormulaKind::Constraint, Formula::not(body_formula(r)));
    }
    fs.push(FormulaKind::Pin, Formula::Pin(IntVar::Z, 0));
    fs
}

/// Translation of one module. The scope must be a component of the
/// program's dependency graph.
pub fn toc_module(p: &Program, scope: &BTreeSet<AtomId>, opts: TocOptions) -> Result<FormulaSet> {
    let g = build_depgraph(p);
    let parts: SccPartition = sccs(&g, p);
    if parts.position(scope).is_none() {
        return Err(Error::invalid("scope is not a strongly connected component"));
    }
    Ok(module_formulas(p, &g, scope, opts))
}

fn sorted_by_name<'a>(p: &Program, atoms: impl IntoIterator<Item = &'a AtomId>) -> Vec<AtomId> {
    let mut v: Vec<AtomId> = atoms.into_iter().copied().collect();
    v.sort_by(|a, b| p.name(*a).cmp(p.name(*b)));
    v
}

fn module_formulas(p: &Program, g: &DepGraph, scope: &BTreeSet<AtomId>, opts: TocOptions) -> FormulaSet {
    let mut fs = FormulaSet::over(&p.signature);
    let module = module_unchecked(p, scope);
    let atoms = sorted_by_name(p, scope);
    let recursive = is_recursive(g, scope);

    // rules grouped by head, program order within each head
    let mut defs: BTreeMap<AtomId, Vec<usize>> = BTreeMap::new();
    for &i in &module.rules {
        defs.entry(p.rules[i].head.expect("module rules have heads")).or_default().push(i);
    }

    if recursive {
        fs.declare_int(IntVar::Z);
        for &a in &atoms {
            fs.declare_int(IntVar::Level(a));
            fs.formulas.extend(mk_bounds(a, scope.len()));
        }
        for &a in &atoms {
            let succ: BTreeSet<AtomId> = g.successors(a).filter(|b| scope.contains(b)).collect();
            for b in sorted_by_name(p, &succ) {
                fs.declare_bool(BoolVar::Aux(AuxAtom::Dep(a, b)));
                fs.declare_bool(BoolVar::Aux(AuxAtom::Gap(a, b)));
                fs.formulas.extend(mk_dep_gap(a, b));
            }
        }
    }

    for &a in &atoms {
        let Some(rules) = defs.get(&a) else { continue };
        let apps: Vec<Formula> = (1..=rules.len() as u32).map(|i| Formula::aux(AuxAtom::App(a, i))).collect();
        fs.push(FormulaKind::Completion, Formula::iff(Formula::base(a), Formula::or(apps)));
        for (k, &ri) in rules.iter().enumerate() {
            let ordinal = k as u32 + 1;
            let r = &p.rules[ri];
            fs.declare_bool(BoolVar::Aux(AuxAtom::App(a, ordinal)));
            let enc = RuleEncoding { a, ordinal, rule: r, scope, opts };
            match (recursive, ExtensionalAggregate::usable(r, opts)) {
                (false, _) => enc.standard(&mut fs),
                (true, Some(agg)) => enc.extensional(&mut fs, &agg),
                (true, None) => enc.ordered(&mut fs),
            }
        }
    }
    if opts.no_strong {
        fs.formulas.retain(|l| l.kind != FormulaKind::Strong);
    }
    fs
}

/// Sum terms of a body read by truth value, with the total weight of
/// negative literals as the shift.
fn truth_terms(r: &Rule) -> (Vec<PbTerm>, i64) {
    let mut terms = Vec::with_capacity(r.body.len());
    let mut shift = 0;
    for wl in &r.body {
        let v = BoolVar::Base(wl.literal.atom);
        match wl.literal.polarity {
            Polarity::Positive | Polarity::DoubleNegated => terms.push(PbTerm::pos(wl.weight, v)),
            Polarity::Negative => {
                terms.push(PbTerm::neg(wl.weight, v));
                shift += wl.weight as i64;
            }
        }
    }
    (terms, shift)
}

/// The body condition `l <= sum <= u` over truth values.
pub fn body_formula(r: &Rule) -> Formula {
    let (terms, shift) = truth_terms(r);
    Formula::pb(terms, Some(r.lower as i64), r.upper.map(|u| u as i64), shift)
}

struct RuleEncoding<'a> {
    a: AtomId,
    ordinal: u32,
    rule: &'a Rule,
    scope: &'a BTreeSet<AtomId>,
    opts: TocOptions,
}

impl RuleEncoding<'_> {
    fn app(&self) -> Formula {
        Formula::aux(AuxAtom::App(self.a, self.ordinal))
    }

    fn aux(&self, f: fn(AtomId, u32) -> AuxAtom) -> AuxAtom {
        f(self.a, self.ordinal)
    }

    fn reset(&self) -> Formula {
        Formula::diff(IntVar::Level(self.a), IntVar::Z, 1)
    }

    /// The upper-bound side condition, if the rule has an upper bound.
    fn upper_check(&self, fs: &mut FormulaSet) -> Option<Formula> {
        let u = self.rule.upper? as i64;
        let (terms, shift) = truth_terms(self.rule);
        if self.opts.vub_form {
            let vub = self.aux(AuxAtom::Vub);
            fs.declare_bool(BoolVar::Aux(vub));
            fs.push(FormulaKind::VubDef, Formula::iff(Formula::aux(vub), Formula::pb(terms, Some(u + 1), None, shift)));
            fs.push(FormulaKind::VubConstraint, Formula::not(Formula::And(vec![self.app(), Formula::aux(vub)])));
            Some(Formula::not(Formula::aux(vub)))
        } else {
            Some(Formula::pb(terms, None, Some(u), shift))
        }
    }

    fn with_upper(f: Formula, ub: &Option<Formula>) -> Formula {
        match ub {
            Some(u) => Formula::And(vec![f, u.clone()]),
            None => f,
        }
    }

    /// Non-recursive scope: applicability is the body condition itself.
    fn standard(&self, fs: &mut FormulaSet) {
        let f = if self.rule.upper.is_some() && self.opts.vub_form {
            let (terms, shift) = truth_terms(self.rule);
            let lower = Formula::pb(terms, Some(self.rule.lower as i64), None, shift);
            let ub = self.upper_check(fs);
            Self::with_upper(lower, &ub)
        } else {
            body_formula(self.rule)
        };
        fs.push(FormulaKind::Support, Formula::iff(self.app(), f));
    }

    /// Recursive scope, sums over weighted literals.
    fn ordered(&self, fs: &mut FormulaSet) {
        let r = self.rule;
        let a = self.a;
        let mut internal = Vec::new();
        let mut gaps = Vec::new();
        let mut external = Vec::new();
        let mut shift = 0i64;
        for wl in &r.body {
            let b = wl.literal.atom;
            match wl.literal.polarity {
                Polarity::Positive if self.scope.contains(&b) => {
                    internal.push(PbTerm::pos(wl.weight, BoolVar::Aux(AuxAtom::Dep(a, b))));
                    gaps.push(PbTerm::pos(wl.weight, BoolVar::Aux(AuxAtom::Gap(a, b))));
                }
                Polarity::Positive | Polarity::DoubleNegated => external.push(PbTerm::pos(wl.weight, BoolVar::Base(b))),
                Polarity::Negative => {
                    external.push(PbTerm::neg(wl.weight, BoolVar::Base(b)));
                    shift += wl.weight as i64;
                }
            }
        }
        let l = r.lower as i64;
        let internal_weight: u64 = internal.iter().map(|t| t.coeff).sum();
        let external_weight: u64 = external.iter().map(|t| t.coeff).sum();

        let ext_pb = Formula::pb(external.clone(), Some(l), None, shift);
        let int_pb = Formula::pb(internal.into_iter().chain(external.iter().copied()).collect(), Some(l), None, shift);
        let gap_pb = Formula::pb(gaps.into_iter().chain(external).collect(), None, Some(l - 1), shift);

        let ub = self.upper_check(fs);
        if internal_weight == 0 {
            fs.push(FormulaKind::External, Formula::iff(self.app(), Self::with_upper(ext_pb, &ub)));
            fs.push(FormulaKind::Reset, Formula::implies(self.app(), self.reset()));
        } else if external_weight < r.lower {
            fs.push(FormulaKind::Internal, Formula::iff(self.app(), Self::with_upper(int_pb, &ub)));
            fs.push(FormulaKind::Strong, Formula::implies(self.app(), gap_pb));
        } else {
            let (int, ext) = (self.aux(AuxAtom::Int), self.aux(AuxAtom::Ext));
            fs.declare_bool(BoolVar::Aux(int));
            fs.declare_bool(BoolVar::Aux(ext));
            let (int, ext) = (Formula::aux(int), Formula::aux(ext));
            fs.push(FormulaKind::Split, Formula::iff(self.app(), Formula::Or(vec![int.clone(), ext.clone()])));
            fs.push(FormulaKind::Internal, Formula::iff(int.clone(), Self::with_upper(int_pb, &ub)));
            fs.push(FormulaKind::Strong, Formula::implies(int, Formula::Or(vec![gap_pb, ext.clone()])));
            fs.push(FormulaKind::External, Formula::iff(ext.clone(), Self::with_upper(ext_pb, &ub)));
            fs.push(FormulaKind::Reset, Formula::implies(ext, self.reset()));
        }
    }

    /// Recursive scope, aggregate given by its satisfier family.
    fn extensional(&self, fs: &mut FormulaSet, agg: &ExtensionalAggregate) {
        for (kind, f) in toc_abstract(agg, self.a, self.ordinal, self.scope) {
            fs.push(kind, f);
        }
        fs.declare_bool(BoolVar::Aux(self.aux(AuxAtom::Int)));
        fs.declare_bool(BoolVar::Aux(self.aux(AuxAtom::Ext)));
    }
}

/// An aggregate over positive atoms given by the family of atom sets that
/// satisfy it, each set a bit mask over `atoms`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionalAggregate {
    pub atoms: Vec<AtomId>,
    pub satisfiers: BTreeSet<u64>,
}

impl ExtensionalAggregate {
    /// Checks convexity: every set between two satisfiers satisfies.
    pub fn new(atoms: Vec<AtomId>, satisfiers: BTreeSet<u64>) -> Result<Self> {
        if atoms.len() > MAX_EXTENSIONAL_ATOMS {
            return Err(Error::Resource {
                what: "extensional aggregate atoms",
                limit: MAX_EXTENSIONAL_ATOMS,
                actual: atoms.len(),
            });
        }
        let full = (1u64 << atoms.len()) - 1;
        if let Some(&bad) = satisfiers.iter().find(|&&s| s & !full != 0) {
            return Err(Error::invalid(format!("satisfier {bad:#b} mentions atoms beyond the body")));
        }
        for &lo in &satisfiers {
            for &hi in satisfiers.iter().filter(|&&hi| hi & lo == lo) {
                // every mask between lo and hi
                let free = hi & !lo;
                let mut sub = free;
                loop {
                    if !satisfiers.contains(&(lo | sub)) {
                        return Err(Error::NotConvex(format!(
                            "{lo:#b} and {hi:#b} satisfy but {:#b} does not",
                            lo | sub
                        )));
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & free;
                }
            }
        }
        Ok(Self { atoms, satisfiers })
    }

    /// Satisfier family of a positive weight or convex rule.
    pub fn from_rule(r: &Rule) -> Result<Self> {
        if r.body.iter().any(|l| l.literal.polarity != Polarity::Positive) {
            return Err(Error::invalid("extensional aggregates range over positive literals only"));
        }
        let mut weights: BTreeMap<AtomId, u64> = BTreeMap::new();
        for wl in &r.body {
            *weights.entry(wl.literal.atom).or_default() += wl.weight;
        }
        let atoms: Vec<AtomId> = weights.keys().copied().collect();
        if atoms.len() > MAX_EXTENSIONAL_ATOMS {
            return Err(Error::Resource {
                what: "extensional aggregate atoms",
                limit: MAX_EXTENSIONAL_ATOMS,
                actual: atoms.len(),
            });
        }
        let satisfiers = (0..1u64 << atoms.len())
            .filter(|mask| {
                let sum: u64 =
                    atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| weights[a]).sum();
                sum >= r.lower && r.upper.is_none_or(|u| sum <= u)
            })
            .collect();
        Self::new(atoms, satisfiers)
    }

    fn usable(r: &Rule, opts: TocOptions) -> Option<Self> {
        if !opts.extensional || !matches!(r.origin, Origin::Cardinality | Origin::Weight | Origin::Convex) {
            return None;
        }
        Self::from_rule(r).ok()
    }

    /// Inclusion-minimal satisfiers, which generate the upward closure.
    pub fn minimal_satisfiers(&self) -> Vec<u64> {
        self.satisfiers.iter().copied().filter(|&s| !self.satisfiers.iter().any(|&t| t != s && t & s == t)).collect()
    }

    /// Upward closure with every atom read through `lit`.
    fn closure(&self, lit: impl Fn(AtomId) -> Formula) -> Formula {
        Formula::Or(
            self.minimal_satisfiers().into_iter().map(|m| Formula::And(self.members(m).map(&lit).collect())).collect(),
        )
    }

    /// The aggregate itself over truth values.
    fn exact(&self) -> Formula {
        Formula::Or(
            self.satisfiers
                .iter()
                .map(|&m| {
                    Formula::And(
                        self.atoms
                            .iter()
                            .enumerate()
                            .map(
                                |(i, &b)| {
                                    if m >> i & 1 == 1 {
                                        Formula::base(b)
                                    } else {
                                        Formula::not(Formula::base(b))
                                    }
                                },
                            )
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    fn members(&self, mask: u64) -> impl Iterator<Item = AtomId> + '_ {
        self.atoms.iter().enumerate().filter(move |(i, _)| mask >> i & 1 == 1).map(|(_, &b)| b)
    }
}

/// Ordered-completion formulas for rule `ordinal` of `a` whose body is the
/// extensional aggregate `agg`, in a recursive scope.
pub fn toc_abstract(
    agg: &ExtensionalAggregate,
    a: AtomId,
    ordinal: u32,
    scope: &BTreeSet<AtomId>,
) -> Vec<(FormulaKind, Formula)> {
    let app = Formula::aux(AuxAtom::App(a, ordinal));
    let int = Formula::aux(AuxAtom::Int(a, ordinal));
    let ext = Formula::aux(AuxAtom::Ext(a, ordinal));
    let inside = |b: AtomId| scope.contains(&b);
    let with_dep = agg.closure(|b| if inside(b) { Formula::aux(AuxAtom::Dep(a, b)) } else { Formula::base(b) });
    let with_gap = agg.closure(|b| if inside(b) { Formula::aux(AuxAtom::Gap(a, b)) } else { Formula::base(b) });
    let outside_only = agg.closure(|b| if inside(b) { Formula::Const(false) } else { Formula::base(b) });
    let exact = agg.exact();
    vec![
        (FormulaKind::Split, Formula::iff(app, Formula::Or(vec![int.clone(), ext.clone()]))),
        (FormulaKind::Internal, Formula::iff(int.clone(), Formula::And(vec![with_dep, exact.clone()]))),
        (FormulaKind::Strong, Formula::implies(int, Formula::Or(vec![Formula::not(with_gap), ext.clone()]))),
        (FormulaKind::External, Formula::iff(ext.clone(), Formula::And(vec![outside_only, exact]))),
        (FormulaKind::Reset, Formula::implies(ext, Formula::diff(IntVar::Level(a), IntVar::Z, 1))),
    ]
}

/// Merged positive weights of a rule that subset normalization accepts.
fn normalizable_weights(r: &Rule) -> Result<Vec<(AtomId, u64)>> {
    if !matches!(r.origin, Origin::Cardinality | Origin::Weight) {
        return Err(Error::invalid("subset normalization applies to cardinality and weight rules"));
    }
    if r.body.iter().any(|l| l.literal.polarity != Polarity::Positive) {
        return Err(Error::invalid("subset normalization needs a positive rule"));
    }
    let mut weights: BTreeMap<AtomId, u64> = BTreeMap::new();
    for wl in &r.body {
        *weights.entry(wl.literal.atom).or_default() += wl.weight;
    }
    Ok(weights.into_iter().collect())
}

/// Replaces rule `index` of `p` by one positive normal rule per
/// inclusion-minimal body subset reaching the bound.
pub fn normalize_subsets(p: &Program, index: usize) -> Result<Program> {
    let r = p.rules.get(index).ok_or_else(|| Error::invalid(format!("no rule {index}")))?;
    let head = r.head.ok_or_else(|| Error::invalid("subset normalization needs a head"))?;
    let weights = normalizable_weights(r)?;
    if weights.len() > MAX_EXTENSIONAL_ATOMS {
        return Err(Error::Resource {
            what: "normalized body atoms",
            limit: MAX_EXTENSIONAL_ATOMS,
            actual: weights.len(),
        });
    }
    let sum =
        |mask: u64| -> u64 { weights.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, w)| w.1).sum() };
    let reaching: Vec<u64> = (0..1u64 << weights.len()).filter(|&m| sum(m) >= r.lower).collect();
    let minimal = reaching.iter().filter(|&&m| !reaching.iter().any(|&t| t != m && t & m == t));
    let mut rules: Vec<Rule> = p.rules[..index].to_vec();
    for &m in minimal {
        let body: Vec<AtomId> =
            weights.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, (b, _))| *b).collect();
        rules.push(Rule::normal(head, &body, &[]));
    }
    rules.extend_from_slice(&p.rules[index + 1..]);
    Program::new(p.signature.clone(), rules)
}

/// Number of inclusion-minimal subsets of items with the given weights
/// whose sum reaches `bound`, without enumerating them.
///
/// A set reaching the bound is minimal iff dropping its lightest element
/// falls below the bound, so each minimal set is counted once, at its
/// lightest element in a fixed heaviest-first order.
pub fn count_minimal_subsets(weights: &[u64], bound: u64) -> u128 {
    if bound == 0 {
        return 1;
    }
    let mut sorted: Vec<u64> = weights.iter().copied().filter(|&w| w > 0).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let cap = bound as usize;
    // ways[s] = subsets of the items seen so far with sum s < bound
    let mut ways = vec![0u128; cap];
    ways[0] = 1;
    let mut total = 0u128;
    for &w in &sorted {
        let w_us = w as usize;
        for (s, &n) in ways.iter().enumerate() {
            if s as u64 + w >= bound {
                total += n;
            }
        }
        for s in (0..cap).rev() {
            if s >= w_us {
                ways[s] += ways[s - w_us];
            }
        }
    }
    total
}

/// Number of rules the subset normalization of rule `r` would produce.
pub fn normalized_size(r: &Rule) -> Result<u128> {
    let weights = normalizable_weights(r)?;
    Ok(count_minimal_subsets(&weights.iter().map(|w| w.1).collect::<Vec<_>>(), r.lower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_str;

    fn labels(fs: &FormulaSet) -> Vec<String> {
        fs.formulas.iter().map(|l| format!("[{}] {}", l.kind.label(), fs.sexpr(&l.formula))).collect()
    }

    #[test]
    fn self_loop_formulas() {
        let p = parse_str("a :- a.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        fs.validate().unwrap();
        assert_eq!(
            labels(&fs),
            [
                "[bounds] (<= (- __z __x_a) -1)",
                "[bounds] (<= (- __x_a __z) 2)",
                "[bounds] (=> (not a) (<= (- __z __x_a) -2))",
                "[dep] (= __dep_a__a (and a false))",
                "[gap] (= __gap_a__a (and a false))",
                "[completion] (= a __app_a_1)",
                "[internal] (= __app_a_1 (pb (>= 1) (* 1 __dep_a__a)))",
                "[strong] (=> __app_a_1 (pb (<= 0) (* 1 __gap_a__a)))",
                "[pin] (= __z 0)",
            ]
        );
        assert_eq!(fs.ints.len(), 2);
        assert_eq!(fs.bools.len(), 4);
    }

    #[test]
    fn tight_program_has_only_z() {
        let p = parse_str("{b1}. {b2}. a :- 1 <= { b1, b2 }.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        assert_eq!(fs.ints, BTreeSet::from([IntVar::Z]));
        assert_eq!(fs.count(FormulaKind::Support), 3);
    }

    #[test]
    fn undefined_atoms_get_no_formulas() {
        let p = parse_str("a :- not b.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        assert_eq!(fs.count(FormulaKind::Completion), 1);
    }

    #[test]
    fn cardinality_in_scope_uses_case_b() {
        let mut text = String::from("a :- 1 <= { b1, b2, b3 }.\n");
        for i in 1..=3 {
            text.push_str(&format!("b{i} :- a.\n"));
        }
        let p = parse_str(&text).unwrap();
        let fs = toc_program(&p, TocOptions::default());
        let l = labels(&fs);
        assert!(l.contains(
            &"[internal] (= __app_a_1 (pb (>= 1) (* 1 __dep_a__b1) (* 1 __dep_a__b2) (* 1 __dep_a__b3)))".to_string()
        ));
        assert!(l.contains(
            &"[strong] (=> __app_a_1 (pb (<= 0) (* 1 __gap_a__b1) (* 1 __gap_a__b2) (* 1 __gap_a__b3)))".to_string()
        ));
    }

    #[test]
    fn mixed_support_uses_split() {
        let p = parse_str("a :- b, not c. b :- a. a :- 1 <= { b, d }.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        assert_eq!(fs.count(FormulaKind::Split), 1);
        assert_eq!(fs.count(FormulaKind::Reset), 1);
        let no_strong = toc_program(&p, TocOptions { no_strong: true, ..Default::default() });
        assert_eq!(no_strong.count(FormulaKind::Strong), 0);
        assert_eq!(fs.len() - no_strong.len(), fs.count(FormulaKind::Strong));
    }

    #[test]
    fn vub_form_adds_constraint() {
        let p = parse_str("a :- 1 <= { b, c } <= 1. b :- a. {c}.").unwrap();
        let fs = toc_program(&p, TocOptions { vub_form: true, ..Default::default() });
        fs.validate().unwrap();
        assert_eq!(fs.count(FormulaKind::VubDef), 1);
        assert_eq!(fs.count(FormulaKind::VubConstraint), 1);
    }

    #[test]
    fn constraints_are_negated_bodies() {
        let p = parse_str("{a}. :- a.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        assert_eq!(labels(&fs)[2], "[constraint] (not (pb (>= 1) (* 1 a)))");
    }

    #[test]
    fn toc_module_rejects_non_component() {
        let p = parse_str("a :- b. b :- a.").unwrap();
        assert!(toc_module(&p, &BTreeSet::from([p.atom("a").unwrap()]), TocOptions::default()).is_err());
    }

    #[test]
    fn example_six_minimal_satisfiers() {
        let p = parse_str("a :- 7 <= { b1=7, b2=5, b3=3, b4=2, b5=1 }.").unwrap();
        let agg = ExtensionalAggregate::from_rule(&p.rules[0]).unwrap();
        let mut mins: Vec<Vec<String>> = agg
            .minimal_satisfiers()
            .into_iter()
            .map(|m| agg.members(m).map(|b| p.name(b).to_string()).collect())
            .collect();
        mins.sort();
        assert_eq!(mins, vec![vec!["b1"], vec!["b2", "b3"], vec!["b2", "b4"]]);
    }

    #[test]
    fn non_convex_family_rejected() {
        let atoms = vec![AtomId(0), AtomId(1)];
        assert!(matches!(ExtensionalAggregate::new(atoms.clone(), BTreeSet::from([0, 3])), Err(Error::NotConvex(_))));
        ExtensionalAggregate::new(atoms, BTreeSet::from([0, 1, 2, 3])).unwrap();
    }

    #[test]
    fn normalization_sizes() {
        let p = parse_str("a :- 2 <= { b1, b2, b3, b4 }.").unwrap();
        assert_eq!(normalize_subsets(&p, 0).unwrap().rules.len(), 6);
        let p = parse_str("a :- 7 <= { b1=7, b2=5, b3=3, b4=2, b5=1 }.").unwrap();
        let q = normalize_subsets(&p, 0).unwrap();
        assert_eq!(q.rules.len(), 3);
        assert!(q.rules.iter().all(|r| r.origin == Origin::Normal));
        let p = parse_str("a :- 1 <= { b1, b2, b3, b4, b5 }.").unwrap();
        assert_eq!(normalize_subsets(&p, 0).unwrap().rules.len(), 5);
        let p = parse_str("a :- 1 <= { b1, b2, b3, b4, b5, b6, b7 }.").unwrap();
        assert!(matches!(normalize_subsets(&p, 0), Err(Error::Resource { .. })));
        let p = parse_str("a :- 1 <= { b1, not b2 }.").unwrap();
        assert!(matches!(normalize_subsets(&p, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn minimal_subset_counting() {
        assert_eq!(count_minimal_subsets(&[1; 4], 2), 6);
        assert_eq!(count_minimal_subsets(&[7, 5, 3, 2, 1], 7), 3);
        assert_eq!(count_minimal_subsets(&[1; 40], 20), 137_846_528_820);
        assert_eq!(count_minimal_subsets(&[1, 2], 0), 1);
        assert_eq!(count_minimal_subsets(&[1, 2], 4), 0);
        // against enumeration
        for weights in [vec![3, 3, 2, 1], vec![5, 1, 1, 4, 2, 2], vec![8, 0, 4]] {
            for bound in 0..=15u64 {
                let n = weights.len();
                let sum = |m: u64| -> u64 { (0..n).filter(|i| m >> i & 1 == 1).map(|i| weights[i]).sum() };
                let reach: Vec<u64> = (0..1u64 << n).filter(|&m| sum(m) >= bound).collect();
                let expect = reach.iter().filter(|&&m| !reach.iter().any(|&t| t != m && t & m == t)).count();
                assert_eq!(count_minimal_subsets(&weights, bound), expect as u128, "{weights:?} {bound}");
            }
        }
    }
}
