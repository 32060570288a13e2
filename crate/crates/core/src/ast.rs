//! Ground programs: atoms, literals, canonical rules, interpretations and
//! level rankings.
//!
//! Every rule form (normal, choice, cardinality, weight, bounded weight,
//! integrity constraint, fact) is stored in one canonical shape: a list of
//! weighted literals plus a lower bound and an optional upper bound. A body
//! holds in an interpretation `I` iff `lower <= weight_sum(I, body) <= upper`.
//! Choice rules `{a} :- B` carry an extra double-negated literal `not not a`
//! of weight 1, which makes them ordinary bodies downstream.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Index of an atom in a [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub name: String,
    pub visible: bool,
}

/// The atoms of a program, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    atoms: Vec<Atom>,
    index: HashMap<String, AtomId>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, adding it as a visible atom if needed.
    pub fn intern(&mut self, name: &str) -> AtomId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(Atom { name: name.to_string(), visible: true });
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<AtomId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: AtomId) -> &Atom {
        &self.atoms[id.index()]
    }

    pub fn name(&self, id: AtomId) -> &str {
        &self.atoms[id.index()].name
    }

    pub fn set_visible(&mut self, id: AtomId, visible: bool) {
        self.atoms[id.index()].visible = visible;
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, id: AtomId) -> bool {
        id.index() < self.atoms.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.atoms.len() as u32).map(AtomId)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn visible_ids(&self) -> BTreeSet<AtomId> {
        self.ids().filter(|&id| self.get(id).visible).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
    /// `not not a`; only produced by choice-rule canonicalization.
    DoubleNegated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: AtomId,
    pub polarity: Polarity,
}

impl Literal {
    pub fn pos(atom: AtomId) -> Self {
        Self { atom, polarity: Polarity::Positive }
    }

    pub fn neg(atom: AtomId) -> Self {
        Self { atom, polarity: Polarity::Negative }
    }

    pub fn not_not(atom: AtomId) -> Self {
        Self { atom, polarity: Polarity::DoubleNegated }
    }

    pub fn holds(&self, interp: &Interpretation) -> bool {
        let t = interp.contains(self.atom);
        match self.polarity {
            Polarity::Positive | Polarity::DoubleNegated => t,
            Polarity::Negative => !t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightedLiteral {
    pub literal: Literal,
    pub weight: u64,
}

impl WeightedLiteral {
    pub fn new(literal: Literal, weight: u64) -> Self {
        Self { literal, weight }
    }

    pub fn unit(literal: Literal) -> Self {
        Self { literal, weight: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Normal,
    Choice,
    Cardinality,
    Weight,
    Convex,
    Constraint,
    Fact,
}

/// A canonical generalized weight rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Option<AtomId>,
    pub choice: bool,
    pub body: Vec<WeightedLiteral>,
    pub lower: u64,
    pub upper: Option<u64>,
    pub origin: Origin,
}

impl Rule {
    pub fn fact(head: AtomId) -> Self {
        Self { head: Some(head), choice: false, body: Vec::new(), lower: 0, upper: None, origin: Origin::Fact }
    }

    /// `head :- pos, not neg.`; an empty body yields a fact.
    pub fn normal(head: AtomId, pos: &[AtomId], neg: &[AtomId]) -> Self {
        if pos.is_empty() && neg.is_empty() {
            return Self::fact(head);
        }
        let body = conjunction(pos, neg);
        Self { head: Some(head), choice: false, lower: body.len() as u64, body, upper: None, origin: Origin::Normal }
    }

    /// `{head} :- pos, not neg.`
    pub fn choice(head: AtomId, pos: &[AtomId], neg: &[AtomId]) -> Self {
        let mut body = conjunction(pos, neg);
        body.push(WeightedLiteral::unit(Literal::not_not(head)));
        Self { head: Some(head), choice: true, lower: body.len() as u64, body, upper: None, origin: Origin::Choice }
    }

    /// `:- pos, not neg.`
    pub fn constraint(pos: &[AtomId], neg: &[AtomId]) -> Self {
        let body = conjunction(pos, neg);
        Self { head: None, choice: false, lower: body.len() as u64, body, upper: None, origin: Origin::Constraint }
    }

    /// `head :- lower <= { lits }.`
    pub fn cardinality(head: AtomId, lower: u64, lits: &[Literal]) -> Self {
        let body = lits.iter().copied().map(WeightedLiteral::unit).collect();
        Self { head: Some(head), choice: false, body, lower, upper: None, origin: Origin::Cardinality }
    }

    /// `head :- lower <= { lit=w, ... }.`
    pub fn weight(head: AtomId, lower: u64, body: Vec<WeightedLiteral>) -> Self {
        Self { head: Some(head), choice: false, body, lower, upper: None, origin: Origin::Weight }
    }

    /// `head :- lower <= { lit=w, ... } <= upper.`
    pub fn convex(head: AtomId, lower: u64, upper: u64, body: Vec<WeightedLiteral>) -> Self {
        Self { head: Some(head), choice: false, body, lower, upper: Some(upper), origin: Origin::Convex }
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_none()
    }

    /// Atoms occurring under positive polarity (these induce dependency edges).
    pub fn positive_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.body.iter().filter(|l| l.literal.polarity == Polarity::Positive).map(|l| l.literal.atom)
    }

    pub fn negative_literals(&self) -> impl Iterator<Item = &WeightedLiteral> + '_ {
        self.body.iter().filter(|l| l.literal.polarity != Polarity::Positive)
    }

    /// Sum of the weights of all non-positive literals (the bound adjustment
    /// used when negative literals are moved to the other side).
    pub fn negative_weight_total(&self) -> u64 {
        self.negative_literals().map(|l| l.weight).sum()
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.head.into_iter().chain(self.body.iter().map(|l| l.literal.atom))
    }

    pub fn body_holds(&self, interp: &Interpretation) -> bool {
        let sum = weight_sum(interp, &self.body);
        sum >= self.lower && self.upper.is_none_or(|u| sum <= u)
    }

    /// Whether the body is a plain conjunction (unit weights, bound = size).
    pub fn is_conjunctive(&self) -> bool {
        self.upper.is_none() && self.body.iter().all(|l| l.weight == 1) && self.lower == self.body.len() as u64
    }
}

fn conjunction(pos: &[AtomId], neg: &[AtomId]) -> Vec<WeightedLiteral> {
    pos.iter()
        .map(|&a| WeightedLiteral::unit(Literal::pos(a)))
        .chain(neg.iter().map(|&c| WeightedLiteral::unit(Literal::neg(c))))
        .collect()
}

/// Weight of the literals of `body` satisfied by `interp`.
pub fn weight_sum(interp: &Interpretation, body: &[WeightedLiteral]) -> u64 {
    body.iter().filter(|l| l.literal.holds(interp)).map(|l| l.weight).sum()
}

/// A set of true atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interpretation {
    true_atoms: BTreeSet<AtomId>,
}

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = AtomId>) -> Self {
        Self { true_atoms: atoms.into_iter().collect() }
    }

    /// The interpretation over `atoms` selected by the bits of `mask`.
    pub fn from_mask(atoms: &[AtomId], mask: u64) -> Self {
        Self::from_atoms(atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a))
    }

    pub fn contains(&self, a: AtomId) -> bool {
        self.true_atoms.contains(&a)
    }

    pub fn insert(&mut self, a: AtomId) -> bool {
        self.true_atoms.insert(a)
    }

    pub fn remove(&mut self, a: AtomId) -> bool {
        self.true_atoms.remove(&a)
    }

    pub fn len(&self) -> usize {
        self.true_atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.true_atoms.iter().copied()
    }

    pub fn atoms(&self) -> &BTreeSet<AtomId> {
        &self.true_atoms
    }

    pub fn is_subset(&self, other: &Interpretation) -> bool {
        self.true_atoms.is_subset(&other.true_atoms)
    }

    pub fn restrict(&self, keep: &BTreeSet<AtomId>) -> Self {
        Self { true_atoms: self.true_atoms.intersection(keep).copied().collect() }
    }

    pub fn union(&self, other: &Interpretation) -> Self {
        Self { true_atoms: self.true_atoms.union(&other.true_atoms).copied().collect() }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> DisplayInterp<'a> {
        DisplayInterp { interp: self, sig }
    }

    pub fn names(&self, sig: &Signature) -> Vec<String> {
        let mut names: Vec<String> = self.iter().map(|a| sig.name(a).to_string()).collect();
        names.sort();
        names
    }
}

impl FromIterator<AtomId> for Interpretation {
    fn from_iter<T: IntoIterator<Item = AtomId>>(iter: T) -> Self {
        Self::from_atoms(iter)
    }
}

pub struct DisplayInterp<'a> {
    interp: &'a Interpretation,
    sig: &'a Signature,
}

impl fmt::Display for DisplayInterp<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.interp.names(self.sig).join(", "))
    }
}

/// Derivation stage of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    /// Given as input (stage 0).
    Input,
    Level(u32),
    /// Never derived.
    Infinite,
}

impl Rank {
    pub fn finite(self) -> Option<u32> {
        match self {
            Rank::Input => Some(0),
            Rank::Level(i) => Some(i),
            Rank::Infinite => None,
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Input => f.write_str("input"),
            Rank::Level(i) => write!(f, "{i}"),
            Rank::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelRanking {
    ranks: BTreeMap<AtomId, Rank>,
}

impl LevelRanking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, a: AtomId, r: Rank) {
        self.ranks.insert(a, r);
    }

    /// Atoms without an entry are never derived.
    pub fn get(&self, a: AtomId) -> Rank {
        self.ranks.get(&a).copied().unwrap_or(Rank::Infinite)
    }

    pub fn iter(&self) -> impl Iterator<Item = (AtomId, Rank)> + '_ {
        self.ranks.iter().map(|(&a, &r)| (a, r))
    }
}

/// A ground program with its signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub signature: Signature,
}

impl Program {
    pub fn new(signature: Signature, rules: Vec<Rule>) -> Result<Self> {
        let p = Self { rules, signature };
        p.validate()?;
        Ok(p)
    }

    /// Checks the structural invariants of canonical rules.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            for a in r.atoms() {
                if !self.signature.contains(a) {
                    return Err(Error::invalid(format!("rule {i} mentions atom #{} outside the signature", a.0)));
                }
            }
            if r.head.is_none() != (r.origin == Origin::Constraint) {
                return Err(Error::invalid(format!("rule {i}: head absent iff constraint")));
            }
            if r.choice != (r.origin == Origin::Choice) {
                return Err(Error::invalid(format!("rule {i}: choice flag disagrees with origin")));
            }
            if r.upper.is_some() && !matches!(r.origin, Origin::Convex | Origin::Constraint) {
                return Err(Error::invalid(format!("rule {i}: upper bound on a non-convex rule")));
            }
            if matches!(r.origin, Origin::Normal | Origin::Choice) && !r.is_conjunctive() {
                return Err(Error::invalid(format!("rule {i}: normal/choice body is not conjunctive")));
            }
            let nn: Vec<_> = r.body.iter().filter(|l| l.literal.polarity == Polarity::DoubleNegated).collect();
            if r.choice {
                if nn.len() != 1 || Some(nn[0].literal.atom) != r.head {
                    return Err(Error::invalid(format!("rule {i}: choice rule without its `not not` literal")));
                }
            } else if !nn.is_empty() {
                return Err(Error::invalid(format!("rule {i}: double negation outside a choice rule")));
            }
            if r.origin == Origin::Fact && (!r.body.is_empty() || r.lower != 0) {
                return Err(Error::invalid(format!("rule {i}: fact with a body")));
            }
        }
        Ok(())
    }

    pub fn atom(&self, name: &str) -> Option<AtomId> {
        self.signature.lookup(name)
    }

    pub fn name(&self, a: AtomId) -> &str {
        self.signature.name(a)
    }

    /// Rules with head `a`, in program order.
    pub fn def_of(&self, a: AtomId) -> Result<Vec<&Rule>> {
        Ok(self.def_indices(a)?.into_iter().map(|i| &self.rules[i]).collect())
    }

    /// Indices of the rules with head `a`, in program order.
    pub fn def_indices(&self, a: AtomId) -> Result<Vec<usize>> {
        if !self.signature.contains(a) {
            return Err(Error::UnknownAtom(format!("#{}", a.0)));
        }
        Ok(self.rules.iter().enumerate().filter(|(_, r)| r.head == Some(a)).map(|(i, _)| i).collect())
    }

    pub fn heads(&self) -> BTreeSet<AtomId> {
        self.rules.iter().filter_map(|r| r.head).collect()
    }

    /// Atoms without defining rules; they vary freely.
    pub fn undefined_atoms(&self) -> BTreeSet<AtomId> {
        let heads = self.heads();
        self.signature.ids().filter(|a| !heads.contains(a)).collect()
    }

    pub fn constraints(&self) -> impl Iterator<Item = &Rule> + '_ {
        self.rules.iter().filter(|r| r.is_constraint())
    }

    pub fn atom_ids(&self) -> Vec<AtomId> {
        self.signature.ids().collect()
    }

    /// Whether `interp` satisfies every rule classically (choice rules always hold).
    pub fn is_model(&self, interp: &Interpretation) -> bool {
        self.rules.iter().all(|r| r.choice || !r.body_holds(interp) || r.head.is_some_and(|h| interp.contains(h)))
    }
}

/// Incremental construction of programs from atom names.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    signature: Signature,
    rules: Vec<Rule>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn atom(&mut self, name: &str) -> AtomId {
        self.signature.intern(name)
    }

    pub fn atoms(&mut self, names: &[&str]) -> Vec<AtomId> {
        names.iter().map(|n| self.atom(n)).collect()
    }

    pub fn hide(&mut self, name: &str) -> &mut Self {
        let id = self.atom(name);
        self.signature.set_visible(id, false);
        self
    }

    pub fn rule(&mut self, r: Rule) -> &mut Self {
        self.rules.push(r);
        self
    }

    pub fn fact(&mut self, h: &str) -> &mut Self {
        let h = self.atom(h);
        self.rule(Rule::fact(h))
    }

    pub fn normal(&mut self, h: &str, pos: &[&str], neg: &[&str]) -> &mut Self {
        let h = self.atom(h);
        let (p, n) = (self.atoms(pos), self.atoms(neg));
        self.rule(Rule::normal(h, &p, &n))
    }

    pub fn choice(&mut self, h: &str, pos: &[&str], neg: &[&str]) -> &mut Self {
        let h = self.atom(h);
        let (p, n) = (self.atoms(pos), self.atoms(neg));
        self.rule(Rule::choice(h, &p, &n))
    }

    pub fn constraint(&mut self, pos: &[&str], neg: &[&str]) -> &mut Self {
        let (p, n) = (self.atoms(pos), self.atoms(neg));
        self.rule(Rule::constraint(&p, &n))
    }

    /// Positive cardinality rule.
    pub fn cardinality(&mut self, h: &str, lower: u64, body: &[&str]) -> &mut Self {
        let h = self.atom(h);
        let lits: Vec<_> = self.atoms(body).into_iter().map(Literal::pos).collect();
        self.rule(Rule::cardinality(h, lower, &lits))
    }

    /// Weight rule; negative literals are written `"not c"`.
    pub fn weight(&mut self, h: &str, lower: u64, body: &[(&str, u64)]) -> &mut Self {
        let h = self.atom(h);
        let body = self.weighted(body);
        self.rule(Rule::weight(h, lower, body))
    }

    pub fn convex(&mut self, h: &str, lower: u64, upper: u64, body: &[(&str, u64)]) -> &mut Self {
        let h = self.atom(h);
        let body = self.weighted(body);
        self.rule(Rule::convex(h, lower, upper, body))
    }

    fn weighted(&mut self, body: &[(&str, u64)]) -> Vec<WeightedLiteral> {
        body.iter()
            .map(|&(s, w)| match s.strip_prefix("not ") {
                Some(c) => WeightedLiteral::new(Literal::neg(self.atom(c.trim())), w),
                None => WeightedLiteral::new(Literal::pos(self.atom(s)), w),
            })
            .collect()
    }

    pub fn build(&self) -> Program {
        let p = Program { rules: self.rules.clone(), signature: self.signature.clone() };
        debug_assert!(p.validate().is_ok(), "{:?}", p.validate());
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example6_body(b: &mut ProgramBuilder) -> Vec<WeightedLiteral> {
        [("b1", 7), ("b2", 5), ("b3", 3), ("b4", 2), ("b5", 1)]
            .iter()
            .map(|&(n, w)| WeightedLiteral::new(Literal::pos(b.atom(n)), w))
            .collect()
    }

    #[test]
    fn def_of_filters_by_head_in_order() {
        let p =
            ProgramBuilder::new().normal("a", &["b"], &[]).normal("a", &["c"], &[]).normal("b", &["a"], &[]).build();
        let a = p.atom("a").unwrap();
        let defs = p.def_of(a).unwrap();
        assert_eq!(defs.len(), 2);
        assert_eq!(defs[0].body[0].literal.atom, p.atom("b").unwrap());
        assert_eq!(defs[1].body[0].literal.atom, p.atom("c").unwrap());
    }

    #[test]
    fn def_of_empty_and_unknown() {
        let mut b = ProgramBuilder::new();
        b.normal("b", &["a"], &[]);
        let p = b.build();
        assert!(p.def_of(p.atom("a").unwrap()).unwrap().is_empty());
        assert!(matches!(p.def_of(AtomId(99)), Err(Error::UnknownAtom(_))));
    }

    #[test]
    fn def_of_many_unit_rules() {
        let mut b = ProgramBuilder::new();
        for i in 1..=6 {
            let bi = format!("b{i}");
            b.normal("a", &[&bi], &[]).normal(&bi, &["a"], &[]);
        }
        let p = b.build();
        assert_eq!(p.def_of(p.atom("a").unwrap()).unwrap().len(), 6);
    }

    #[test]
    fn def_of_partitions_non_constraint_rules() {
        let p = ProgramBuilder::new()
            .normal("a", &["b"], &[])
            .choice("b", &[], &[])
            .constraint(&["a"], &["b"])
            .weight("c", 2, &[("a", 1), ("not b", 2)])
            .build();
        let mut seen = vec![0; p.rules.len()];
        for a in p.signature.ids() {
            for i in p.def_indices(a).unwrap() {
                seen[i] += 1;
            }
        }
        for (i, r) in p.rules.iter().enumerate() {
            assert_eq!(seen[i], usize::from(!r.is_constraint()));
        }
    }

    #[test]
    fn weight_sum_examples() {
        let mut b = ProgramBuilder::new();
        let body = example6_body(&mut b);
        let i = Interpretation::from_atoms(["b1", "b3", "b4"].map(|n| b.atom(n)));
        assert_eq!(weight_sum(&i, &body), 12);
        assert_eq!(weight_sum(&Interpretation::new(), &body), 0);
        let c = b.atom("c");
        assert_eq!(weight_sum(&Interpretation::new(), &[WeightedLiteral::new(Literal::neg(c), 4)]), 4);
    }

    #[test]
    fn choice_canonical_form() {
        let mut b = ProgramBuilder::new();
        b.choice("a", &["b"], &["c"]);
        let p = b.build();
        let r = &p.rules[0];
        assert!(r.choice);
        assert_eq!(r.lower, 3);
        assert_eq!(r.body.last().unwrap().literal, Literal::not_not(p.atom("a").unwrap()));
        let a = p.atom("a").unwrap();
        let bb = p.atom("b").unwrap();
        assert!(r.body_holds(&Interpretation::from_atoms([a, bb])));
        assert!(!r.body_holds(&Interpretation::from_atoms([bb])));
    }

    #[test]
    fn validation_rejects_broken_rules() {
        let mut sig = Signature::new();
        let a = sig.intern("a");
        let mut r = Rule::normal(a, &[a], &[]);
        r.upper = Some(3);
        assert!(Program::new(sig.clone(), vec![r]).is_err());
        let mut r = Rule::fact(a);
        r.head = None;
        assert!(Program::new(sig.clone(), vec![r]).is_err());
        assert!(Program::new(sig, vec![Rule::normal(a, &[AtomId(7)], &[])]).is_err());
    }

    #[test]
    fn duplicate_literals_add_up() {
        let mut b = ProgramBuilder::new();
        b.weight("a", 5, &[("b", 2), ("b", 3)]);
        let p = b.build();
        let bb = p.atom("b").unwrap();
        assert!(p.rules[0].body_holds(&Interpretation::from_atoms([bb])));
    }
}
