//! Equivalence harness for aggregate encodings: a positive cardinality or
//! weight rule is translated once as an aggregate and once through its
//! subset normalization, and the two translations must admit the same
//! models once the disjunction of the normalized rules' applicability atoms
//! is identified with the aggregate's applicability atom.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::ast::{AtomId, Literal, Origin, Polarity, Program, Rule, Signature, WeightedLiteral};
use crate::dlcheck::enumerate_dl_models;
use crate::error::{Error, Result};
use crate::formula::{AuxAtom, BoolVar, DlModel, Formula, FormulaKind, FormulaSet, IntVar};
use crate::toc::{normalize_subsets, toc_program, TocOptions};

/// Largest body handled by the harness.
pub const MAX_BODY_ATOMS: usize = 5;

/// Which aggregate shape is being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Proposition {
    /// Positive cardinality rule with lower bound 1.
    UnitCardinality,
    /// Positive cardinality rule with any lower bound.
    Cardinality,
    /// Positive weight rule.
    Weight,
}

impl Proposition {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::UnitCardinality),
            2 => Ok(Self::Cardinality),
            3 => Ok(Self::Weight),
            _ => Err(Error::invalid(format!("unknown proposition variant {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::UnitCardinality => 1,
            Self::Cardinality => 2,
            Self::Weight => 3,
        }
    }
}

/// Drops the strong ranking constraints from one side, to confirm that the
/// comparison notices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    Normalized,
    Aggregated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropositionReport {
    pub status: &'static str,
    pub variant: u8,
    pub normalized_rules: usize,
    pub contexts: usize,
    pub models: usize,
    pub failures: Vec<String>,
}

impl PropositionReport {
    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}

pub fn check_proposition(r: &Rule, sig: &Signature, variant: Proposition) -> Result<PropositionReport> {
    check_proposition_with(r, sig, variant, None)
}

pub fn check_proposition_with(
    r: &Rule,
    sig: &Signature,
    variant: Proposition,
    ablation: Option<Ablation>,
) -> Result<PropositionReport> {
    let (head, body) = validate_shape(r, variant)?;
    let mut failures = Vec::new();
    let mut models = 0;
    let mut normalized_rules = 0;
    let contexts = contexts(head, &body);
    for (name, context) in &contexts {
        let mut rules = vec![r.clone()];
        rules.extend(context.iter().cloned());
        let aggregated = Program::new(sig.clone(), rules)?;
        let normalized = normalize_subsets(&aggregated, 0)?;
        normalized_rules = normalized.def_of(head)?.len();

        let side = |p: &Program, side: Ablation| {
            let no_strong = ablation == Some(side);
            toc_program(p, TocOptions { no_strong, ..Default::default() })
        };
        let agg_fs = side(&aggregated, Ablation::Aggregated);
        let mut norm_fs = side(&normalized, Ablation::Normalized);
        if normalized_rules == 0 {
            // an atom without rules is an input; an empty definition means false
            norm_fs.push(FormulaKind::Completion, Formula::not(Formula::base(head)));
        }
        let shared: Vec<IntVar> =
            agg_fs.ints.intersection(&norm_fs.ints).copied().filter(|v| *v != IntVar::Z).collect();
        let mut agg = project(&agg_fs, &enumerate_dl_models(&agg_fs)?, &shared, head, 1)?;
        let mut norm = project(&norm_fs, &enumerate_dl_models(&norm_fs)?, &shared, head, normalized_rules as u32)?;
        agg.sort();
        norm.sort();
        models += agg.len();
        if agg != norm {
            let only_agg = agg.iter().filter(|m| !norm.contains(m)).count();
            let only_norm = norm.iter().filter(|m| !agg.contains(m)).count();
            failures.push(format!(
                "context {name}: {} aggregated vs {} normalized models, {only_agg} only aggregated, {only_norm} only normalized",
                agg.len(),
                norm.len()
            ));
        }
    }
    Ok(PropositionReport {
        status: if failures.is_empty() { "PASS" } else { "FAIL" },
        variant: variant.index(),
        normalized_rules,
        contexts: contexts.len(),
        models,
        failures,
    })
}

fn validate_shape(r: &Rule, variant: Proposition) -> Result<(AtomId, Vec<AtomId>)> {
    let head = r.head.ok_or_else(|| Error::invalid("proposition check needs a rule with a head"))?;
    if r.choice || r.upper.is_some() || r.body.iter().any(|l| l.literal.polarity != Polarity::Positive) {
        return Err(Error::invalid("proposition check needs a positive rule without upper bound"));
    }
    let shape_ok = match variant {
        Proposition::UnitCardinality => r.origin == Origin::Cardinality && r.lower == 1,
        Proposition::Cardinality => r.origin == Origin::Cardinality,
        Proposition::Weight => matches!(r.origin, Origin::Cardinality | Origin::Weight),
    };
    if !shape_ok {
        return Err(Error::invalid(format!("rule does not have the shape of variant {}", variant.index())));
    }
    let body: Vec<AtomId> = r.positive_atoms().collect::<BTreeSet<_>>().into_iter().collect();
    if body.len() > MAX_BODY_ATOMS {
        return Err(Error::Resource { what: "aggregate body atoms", limit: MAX_BODY_ATOMS, actual: body.len() });
    }
    Ok((head, body))
}

/// Programs around the checked rule: body atoms as free choices, then with
/// every other body atom also derivable from the head, then as a chain fed
/// by the head so that all body atoms share its scope.
fn contexts(head: AtomId, body: &[AtomId]) -> Vec<(&'static str, Vec<Rule>)> {
    let body: Vec<AtomId> = body.iter().copied().filter(|&b| b != head).collect();
    let free: Vec<Rule> = body.iter().map(|&b| Rule::choice(b, &[], &[])).collect();
    let mut feedback = free.clone();
    feedback.extend(body.iter().step_by(2).map(|&b| Rule::normal(b, &[head], &[])));
    let mut chain = free.clone();
    let mut prev = head;
    for &b in &body {
        chain.push(Rule::normal(b, &[prev], &[]));
        prev = b;
    }
    vec![("free", free), ("feedback", feedback), ("chain", chain)]
}

/// Base atoms, the shared level variables of true atoms and the value of the
/// connecting disjunction over `apps` applicability atoms of `head`. Levels
/// of false atoms depend on the scope size, which normalization may shrink.
type Projection = (Vec<bool>, Vec<Option<i64>>, bool);

fn project(fs: &FormulaSet, models: &[DlModel], levels: &[IntVar], head: AtomId, apps: u32) -> Result<Vec<Projection>> {
    let ids: Vec<AtomId> = (0..fs.atoms.len() as u32).map(AtomId).collect();
    models
        .iter()
        .map(|m| {
            let base = ids.iter().map(|&a| m.bool(BoolVar::Base(a))).collect::<Result<_>>()?;
            let z = m.int(IntVar::Z)?;
            let mut ints = Vec::with_capacity(levels.len());
            for &v in levels {
                let IntVar::Level(a) = v else { continue };
                ints.push(if m.bool(BoolVar::Base(a))? { Some(m.int(v)? - z) } else { None });
            }
            let mut connect = false;
            for i in 1..=apps {
                connect |= m.bool(BoolVar::Aux(AuxAtom::App(head, i)))?;
            }
            Ok((base, ints, connect))
        })
        .collect()
}

/// Number of formulas of the aggregated and normalized translations of `r`
/// in its free context, as a measure of encoding size.
pub fn encoding_sizes(r: &Rule, sig: &Signature) -> Result<(usize, usize)> {
    let p = Program::new(sig.clone(), vec![r.clone()])?;
    let n = normalize_subsets(&p, 0)?;
    let size = |fs: FormulaSet| fs.len() - fs.count(FormulaKind::Pin);
    Ok((size(toc_program(&p, TocOptions::default())), size(toc_program(&n, TocOptions::default()))))
}

/// A random positive weight rule `a :- l <= { b1=w1, ... }` over at most
/// `max_body` body atoms, with weights up to `max_weight` and a lower bound
/// up to `max_bound`.
pub fn random_weight_rule(rng: &mut impl Rng, max_body: usize, max_weight: u64, max_bound: u64) -> (Rule, Signature) {
    let mut sig = Signature::new();
    let head = sig.intern("a");
    let n = rng.gen_range(1..=max_body.max(1));
    let body = (1..=n)
        .map(|i| WeightedLiteral::new(Literal::pos(sig.intern(&format!("b{i}"))), rng.gen_range(0..=max_weight)))
        .collect();
    (Rule::weight(head, rng.gen_range(0..=max_bound), body), sig)
}

/// The positive cardinality rule `a :- l <= { b1, ..., bn }`.
pub fn cardinality_rule(n: usize, lower: u64) -> (Rule, Signature) {
    let mut sig = Signature::new();
    let head = sig.intern("a");
    let lits: Vec<Literal> = (1..=n).map(|i| Literal::pos(sig.intern(&format!("b{i}")))).collect();
    (Rule::cardinality(head, lower, &lits), sig)
}
