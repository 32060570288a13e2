//! Reference semantics by exhaustive enumeration: reducts, the immediate
//! consequence operator, least, stable and supported models, and level
//! numberings.
//!
//! Nothing here depends on the translation; the oracle only guesses
//! interpretations and checks them against the definitions.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{AtomId, Interpretation, LevelRanking, Origin, Polarity, Program, Rank, Rule};
use crate::depgraph::Module;
use crate::error::{Error, Result};

/// Default limit on the signature size for enumeration.
pub const DEFAULT_CAP: usize = 20;

/// A negation-free rule. With an upper bound the body is the upward closure
/// of the bounded aggregate: it holds in `I` iff some subset of the true
/// body atoms has a weight in `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveRule {
    pub head: AtomId,
    /// Distinct atoms with their summed weights.
    pub lits: Vec<(AtomId, u64)>,
    pub lower: u64,
    pub upper: Option<u64>,
    /// Index of the originating rule.
    pub source: usize,
}

impl PositiveRule {
    pub fn holds(&self, interp: &Interpretation) -> bool {
        let true_weights: Vec<u64> = self.lits.iter().filter(|(a, _)| interp.contains(*a)).map(|&(_, w)| w).collect();
        let total: u64 = true_weights.iter().sum();
        match self.upper {
            None => total >= self.lower,
            Some(u) if self.lower > u => false,
            Some(u) if total <= u => total >= self.lower,
            Some(u) => {
                // subset sums reachable without exceeding u
                let mut reach = BTreeSet::from([0u64]);
                for w in true_weights {
                    let next: Vec<u64> = reach.iter().map(|s| s + w).filter(|&s| s <= u).collect();
                    reach.extend(next);
                }
                reach.range(self.lower..=u).next().is_some()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PositiveProgram {
    pub rules: Vec<PositiveRule>,
}

impl PositiveProgram {
    /// Reads a program that is already positive; negative literals, choice
    /// rules and constraints are contract violations.
    pub fn from_program(p: &Program) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, r) in p.rules.iter().enumerate() {
            let head = r.head.ok_or_else(|| Error::invalid(format!("rule {i} is a constraint")))?;
            if r.body.iter().any(|l| l.literal.polarity != Polarity::Positive) {
                return Err(Error::invalid(format!("rule {i} is not positive")));
            }
            rules.push(PositiveRule { head, lits: merge_positive(r), lower: r.lower, upper: r.upper, source: i });
        }
        Ok(Self { rules })
    }

    pub fn heads(&self) -> BTreeSet<AtomId> {
        self.rules.iter().map(|r| r.head).collect()
    }
}

fn merge_positive(r: &Rule) -> Vec<(AtomId, u64)> {
    let mut m: BTreeMap<AtomId, u64> = BTreeMap::new();
    for a in r.body.iter().filter(|l| l.literal.polarity == Polarity::Positive) {
        *m.entry(a.literal.atom).or_default() += a.weight;
    }
    m.into_iter().collect()
}

/// Weight contributed by the negative and double-negated literals of `r` in `interp`.
fn fixed_contribution(r: &Rule, interp: &Interpretation) -> u64 {
    r.negative_literals().filter(|l| l.literal.holds(interp)).map(|l| l.weight).sum()
}

/// Reduct of a single rule; `None` when the rule is deleted.
fn reduct_rule(i: usize, r: &Rule, interp: &Interpretation) -> Option<PositiveRule> {
    let head = r.head?;
    let k = fixed_contribution(r, interp);
    match r.origin {
        Origin::Constraint => None,
        Origin::Normal | Origin::Choice | Origin::Fact => (k == r.negative_weight_total()).then(|| PositiveRule {
            head,
            lits: merge_positive(r),
            lower: r.lower - k,
            upper: None,
            source: i,
        }),
        Origin::Cardinality | Origin::Weight => Some(PositiveRule {
            head,
            lits: merge_positive(r),
            lower: r.lower.saturating_sub(k),
            upper: None,
            source: i,
        }),
        Origin::Convex => aggregate_reduct_at(i, r, interp),
    }
}

fn aggregate_reduct_at(i: usize, r: &Rule, interp: &Interpretation) -> Option<PositiveRule> {
    if !r.body_holds(interp) {
        return None;
    }
    let k = fixed_contribution(r, interp);
    Some(PositiveRule {
        head: r.head?,
        lits: merge_positive(r),
        lower: r.lower.saturating_sub(k),
        upper: r.upper.map(|u| u - k),
        source: i,
    })
}

/// Reduct of a bounded aggregate rule: the upward closure of its body with
/// negative literals fixed by `interp`. `None` when the body fails in `interp`.
pub fn aggregate_reduct(r: &Rule, interp: &Interpretation) -> Option<PositiveRule> {
    aggregate_reduct_at(0, r, interp)
}

pub fn reduct(p: &Program, interp: &Interpretation) -> PositiveProgram {
    PositiveProgram { rules: p.rules.iter().enumerate().filter_map(|(i, r)| reduct_rule(i, r, interp)).collect() }
}

/// Reduct restricted to the rules of one module.
pub fn module_reduct(p: &Program, m: &Module, interp: &Interpretation) -> PositiveProgram {
    PositiveProgram { rules: m.rules.iter().filter_map(|&i| reduct_rule(i, &p.rules[i], interp)).collect() }
}

/// Heads of rules whose bodies hold in `interp`.
pub fn tp_step(pp: &PositiveProgram, interp: &Interpretation) -> Interpretation {
    pp.rules.iter().filter(|r| r.holds(interp)).map(|r| r.head).collect()
}

/// Least fixed point of the operator seeded with `input`, with the
/// iteration at which every atom first appears.
pub fn least_model(pp: &PositiveProgram, input: &Interpretation) -> Result<(Interpretation, LevelRanking)> {
    let heads = pp.heads();
    if let Some(a) = input.iter().find(|a| heads.contains(a)) {
        return Err(Error::invalid(format!("input atom #{} is defined by the program", a.0)));
    }
    let mut ranking = LevelRanking::new();
    for a in input.iter() {
        ranking.set(a, Rank::Input);
    }
    let mut current = input.clone();
    let mut level = 0u32;
    loop {
        level += 1;
        let next = tp_step(pp, &current).union(input);
        if next == current {
            return Ok((current, ranking));
        }
        for a in next.iter() {
            if !current.contains(a) {
                ranking.set(a, Rank::Level(level));
            }
        }
        // the operator is monotone, so `next` only grows
        current = next;
    }
}

fn check_cap(p: &Program, cap: usize) -> Result<()> {
    if p.signature.len() > cap {
        return Err(Error::Resource { what: "signature size", limit: cap, actual: p.signature.len() });
    }
    Ok(())
}

fn constraints_hold(p: &Program, m: &Interpretation) -> bool {
    p.constraints().all(|c| !c.body_holds(m))
}

/// Whether `m` is stable: the least model of the reduct, seeded with the
/// true undefined atoms, gives back `m`, and no constraint fires.
pub fn is_stable(p: &Program, m: &Interpretation) -> bool {
    stable_ranking(p, m, &p.undefined_atoms()).is_some()
}

fn stable_ranking(p: &Program, m: &Interpretation, inputs: &BTreeSet<AtomId>) -> Option<LevelRanking> {
    if !constraints_hold(p, m) {
        return None;
    }
    let (lm, ranking) = least_model(&reduct(p, m), &m.restrict(inputs)).ok()?;
    (lm == *m).then_some(ranking)
}

fn all_interpretations(p: &Program) -> impl Iterator<Item = Interpretation> + '_ {
    let atoms = p.atom_ids();
    (0..1u64 << atoms.len()).map(move |mask| Interpretation::from_mask(&atoms, mask))
}

pub fn stable_models(p: &Program) -> Result<Vec<(Interpretation, LevelRanking)>> {
    stable_models_capped(p, DEFAULT_CAP)
}

pub fn stable_models_capped(p: &Program, cap: usize) -> Result<Vec<(Interpretation, LevelRanking)>> {
    check_cap(p, cap)?;
    let inputs = p.undefined_atoms();
    let mut out: Vec<_> =
        all_interpretations(p).filter_map(|m| stable_ranking(p, &m, &inputs).map(|r| (m, r))).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub fn supported_models(p: &Program) -> Result<Vec<Interpretation>> {
    supported_models_capped(p, DEFAULT_CAP)
}

pub fn supported_models_capped(p: &Program, cap: usize) -> Result<Vec<Interpretation>> {
    check_cap(p, cap)?;
    let inputs = p.undefined_atoms();
    let mut out: Vec<_> = all_interpretations(p)
        .filter(|m| constraints_hold(p, m) && tp_step(&reduct(p, m), m).union(&m.restrict(&inputs)) == *m)
        .collect();
    out.sort();
    Ok(out)
}

/// Whether `m` restricted to the module's scope is a stable model of the
/// module for the input read off `m`.
pub fn is_module_stable(p: &Program, module: &Module, m: &Interpretation) -> bool {
    match module_ranks(p, module, m) {
        Ok((lm, _)) => lm.restrict(&module.scope) == m.restrict(&module.scope),
        Err(_) => false,
    }
}

/// Least model and ranks of a module under the input `m ∩ inputs`.
pub fn module_ranks(p: &Program, module: &Module, m: &Interpretation) -> Result<(Interpretation, LevelRanking)> {
    least_model(&module_reduct(p, module, m), &m.restrict(&module.inputs))
}

/// Levels of atoms and rules for a stable model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelNumbering {
    pub atoms: LevelRanking,
    /// One entry per program rule; constraints are never applicable.
    pub rules: Vec<Rank>,
}

impl LevelNumbering {
    pub fn atom(&self, a: AtomId) -> Rank {
        self.atoms.get(a)
    }

    pub fn rule(&self, i: usize) -> Rank {
        self.rules[i]
    }
}

/// Level numbering of a stable model. A rule's level is one more than the
/// first stage at which its reduct body holds; unsupporting rules get `∞`.
pub fn level_numbering(p: &Program, m: &Interpretation) -> Result<LevelNumbering> {
    let inputs = p.undefined_atoms();
    let atoms = stable_ranking(p, m, &inputs).ok_or_else(|| Error::invalid("interpretation is not stable"))?;
    let red = reduct(p, m);
    let max_stage = atoms.iter().filter_map(|(_, r)| r.finite()).max().unwrap_or(0);
    let stage = |j: u32| -> Interpretation {
        atoms.iter().filter(|(_, r)| r.finite().is_some_and(|l| l <= j)).map(|(a, _)| a).collect()
    };
    let stages: Vec<Interpretation> = (0..=max_stage).map(stage).collect();
    let mut rules = vec![Rank::Infinite; p.rules.len()];
    for pr in &red.rules {
        if !pr.holds(m) {
            continue;
        }
        if let Some(j) = stages.iter().position(|s| pr.holds(s)) {
            rules[pr.source] = Rank::Level(j as u32 + 1);
        }
    }
    Ok(LevelNumbering { atoms, rules })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ProgramBuilder;
    use crate::parser::parse_str;

    fn interp(p: &Program, names: &[&str]) -> Interpretation {
        names.iter().map(|n| p.atom(n).unwrap()).collect()
    }

    fn model_names(p: &Program, ms: &[(Interpretation, LevelRanking)]) -> Vec<Vec<String>> {
        let mut v: Vec<_> = ms.iter().map(|(m, _)| m.names(&p.signature)).collect();
        v.sort();
        v
    }

    fn example_six() -> Program {
        parse_str("b1 :- b2. b2 :- b3. b3 :- b4. b4 :- b5. b5. a :- 7 <= { b1=7, b2=5, b3=3, b4=2, b5=1 }.").unwrap()
    }

    #[test]
    fn reduct_of_negation() {
        let p = parse_str("a :- not b.").unwrap();
        let r = reduct(&p, &Interpretation::new());
        assert_eq!(r.rules.len(), 1);
        assert!(r.rules[0].lits.is_empty() && r.rules[0].lower == 0);
        assert!(reduct(&p, &interp(&p, &["b"])).rules.is_empty());
    }

    #[test]
    fn reduct_weight_bound() {
        let p = parse_str("a :- 7 <= { b1=7, b2=5, b3=3, b4=2, b5=1, not c=4 }.").unwrap();
        assert_eq!(reduct(&p, &interp(&p, &["c"])).rules[0].lower, 7);
        assert_eq!(reduct(&p, &Interpretation::new()).rules[0].lower, 3);
        // confirm against direct satisfaction for every set of positive atoms
        let bs: Vec<_> = (1..=5).map(|i| p.atom(&format!("b{i}")).unwrap()).collect();
        for c_true in [false, true] {
            let fixed = if c_true { interp(&p, &["c"]) } else { Interpretation::new() };
            let red = reduct(&p, &fixed);
            for mask in 0..32u64 {
                let x = Interpretation::from_mask(&bs, mask);
                let full = x.union(&fixed);
                assert_eq!(red.rules[0].holds(&x), p.rules[0].body_holds(&full));
            }
        }
    }

    #[test]
    fn choice_reduct_needs_head() {
        let p = parse_str("{a} :- b.").unwrap();
        assert!(reduct(&p, &interp(&p, &["b"])).rules.is_empty());
        let r = reduct(&p, &interp(&p, &["a", "b"]));
        assert_eq!(r.rules[0].lower, 1);
    }

    #[test]
    fn convex_reduct_closure() {
        let p = parse_str("a :- 2 <= { b1, b2, b3, b4 } <= 3.").unwrap();
        let r = &p.rules[0];
        let bs: Vec<_> = (1..=4).map(|i| p.atom(&format!("b{i}")).unwrap()).collect();
        let i = interp(&p, &["a", "b1", "b2", "b3"]);
        let pr = aggregate_reduct(r, &i).expect("body holds");
        for mask in 0..16u64 {
            let x = Interpretation::from_mask(&bs, mask);
            assert_eq!(pr.holds(&x), mask.count_ones() >= 2, "mask {mask:04b}");
        }
        assert!(aggregate_reduct(r, &interp(&p, &["b1", "b2", "b3", "b4"])).is_none());
    }

    #[test]
    fn negative_only_closure_is_constant_true() {
        let p = parse_str("a :- 1 <= { not c, not d } <= 2.").unwrap();
        let pr = aggregate_reduct(&p.rules[0], &Interpretation::new()).unwrap();
        assert!(pr.holds(&Interpretation::new()));
    }

    #[test]
    fn closure_is_not_a_plain_lower_bound() {
        // only {b1,b2} reaches [3,4]; b3 alone overshoots
        let p = parse_str("a :- 3 <= { b1=2, b2=2, b3=5 } <= 4.").unwrap();
        let i = interp(&p, &["b1", "b2"]);
        let pr = aggregate_reduct(&p.rules[0], &i).unwrap();
        assert!(!pr.holds(&interp(&p, &["b3"])));
        assert!(pr.holds(&interp(&p, &["b1", "b2", "b3"])));
    }

    #[test]
    fn tp_step_examples() {
        let p = parse_str("a.").unwrap();
        let pp = PositiveProgram::from_program(&p).unwrap();
        assert_eq!(tp_step(&pp, &Interpretation::new()), interp(&p, &["a"]));

        let p = example_six();
        let pp = PositiveProgram::from_program(&p).unwrap();
        assert_eq!(tp_step(&pp, &Interpretation::new()), interp(&p, &["b5"]));

        let p = parse_str("a :- 1 <= { b1, b2 }.").unwrap();
        let pp = PositiveProgram::from_program(&p).unwrap();
        assert_eq!(tp_step(&pp, &interp(&p, &["b2"])), interp(&p, &["a"]));

        let p = parse_str("a :- not b.").unwrap();
        assert!(PositiveProgram::from_program(&p).is_err());
    }

    #[test]
    fn least_model_levels() {
        let p = example_six();
        let pp = PositiveProgram::from_program(&p).unwrap();
        let (m, r) = least_model(&pp, &Interpretation::new()).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(r.get(p.atom("a").unwrap()), Rank::Level(5));
        for i in 1..=5u32 {
            assert_eq!(r.get(p.atom(&format!("b{i}")).unwrap()), Rank::Level(6 - i));
        }

        let (m, r) = least_model(&PositiveProgram::default(), &Interpretation::new()).unwrap();
        assert!(m.is_empty());
        assert_eq!(r.get(AtomId(0)), Rank::Infinite);

        let p = parse_str("a :- b. b.").unwrap();
        let (_, r) = least_model(&PositiveProgram::from_program(&p).unwrap(), &Interpretation::new()).unwrap();
        assert_eq!(r.get(p.atom("b").unwrap()), Rank::Level(1));
        assert_eq!(r.get(p.atom("a").unwrap()), Rank::Level(2));
    }

    #[test]
    fn least_model_rejects_defined_inputs() {
        let p = parse_str("a :- b. b.").unwrap();
        let pp = PositiveProgram::from_program(&p).unwrap();
        assert!(least_model(&pp, &interp(&p, &["a"])).is_err());
        let (_, r) = least_model(
            &PositiveProgram::from_program(&parse_str("a :- c.").unwrap()).unwrap(),
            &Interpretation::from_atoms([AtomId(1)]),
        )
        .unwrap();
        assert_eq!(r.get(AtomId(1)), Rank::Input);
        assert_eq!(r.get(AtomId(0)), Rank::Level(1));
    }

    #[test]
    fn example_one_stable_models() {
        let p = parse_str("{b1}. {b2}. a :- 1 <= { b1, b2 }.").unwrap();
        let ms = stable_models(&p).unwrap();
        assert_eq!(model_names(&p, &ms), vec![vec![], vec!["a", "b1"], vec!["a", "b1", "b2"], vec!["a", "b2"]]);
        let mut supp: Vec<_> = supported_models(&p).unwrap().iter().map(|m| m.names(&p.signature)).collect();
        supp.sort();
        assert_eq!(supp, model_names(&p, &ms));
    }

    #[test]
    fn self_loop_stable_and_supported() {
        let p = parse_str("a :- a.").unwrap();
        assert_eq!(model_names(&p, &stable_models(&p).unwrap()), vec![Vec::<String>::new()]);
        assert_eq!(supported_models(&p).unwrap().len(), 2);
        assert_eq!(supported_models(&parse_str("a.").unwrap()).unwrap().len(), 1);
    }

    #[test]
    fn odd_loop_has_no_stable_model() {
        let p = parse_str("a :- not a.").unwrap();
        assert!(stable_models(&p).unwrap().is_empty());
    }

    #[test]
    fn undefined_atoms_are_free_and_constraints_filter() {
        let p = parse_str("a :- not b.").unwrap();
        assert_eq!(model_names(&p, &stable_models(&p).unwrap()), vec![vec!["a"], vec!["b"]]);
        let p = parse_str("a :- not b. :- a.").unwrap();
        assert_eq!(model_names(&p, &stable_models(&p).unwrap()), vec![vec!["b"]]);
    }

    #[test]
    fn cap_is_enforced() {
        let mut b = ProgramBuilder::new();
        for i in 0..21 {
            b.fact(&format!("p{i}"));
        }
        assert!(matches!(stable_models(&b.build()), Err(Error::Resource { .. })));
    }

    #[test]
    fn level_numbering_example_six() {
        let p = example_six();
        let m = stable_models(&p).unwrap().remove(0).0;
        let ln = level_numbering(&p, &m).unwrap();
        assert_eq!(ln.atom(p.atom("a").unwrap()), Rank::Level(5));
        assert_eq!(ln.atom(p.atom("b5").unwrap()), Rank::Level(1));
        assert_eq!(ln.rule(4), Rank::Level(1)); // the fact
        assert_eq!(ln.rule(5), Rank::Level(5));
        assert_eq!(ln.rule(0), Rank::Level(5));
    }

    #[test]
    fn level_numbering_example_five() {
        let p = parse_str("b3. b1 :- b3. b4 :- b3. a :- 2 <= { b1, b2, b3, b4 }.").unwrap();
        let m = interp(&p, &["a", "b1", "b3", "b4"]);
        let ln = level_numbering(&p, &m).unwrap();
        assert_eq!(ln.atom(p.atom("a").unwrap()), Rank::Level(3));
        assert_eq!(ln.rule(3), Rank::Level(3));
    }

    #[test]
    fn level_numbering_rejects_unstable() {
        let p = parse_str("a :- a.").unwrap();
        assert!(level_numbering(&p, &interp(&p, &["a"])).is_err());
    }

    #[test]
    fn unsupporting_rules_are_infinite() {
        let p = parse_str("a :- b. a. b :- not a.").unwrap();
        let m = interp(&p, &["a"]);
        let ln = level_numbering(&p, &m).unwrap();
        assert_eq!(ln.rule(0), Rank::Infinite);
        assert_eq!(ln.rule(1), Rank::Level(1));
        assert_eq!(ln.rule(2), Rank::Infinite);
    }
}
