//! Compares the translation against the reference semantics on one
//! program: stable models and translation models must be in bijection,
//! level variables must equal the module-local derivation levels, and each
//! stable model must come with exactly one integer assignment.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::{AtomId, Interpretation, Program, Rank};
use crate::depgraph::{build_depgraph, is_recursive, module_unchecked, sccs};
use crate::dlcheck::enumerate_dl_models;
use crate::error::{Error, Result};
use crate::formula::{DlModel, FormulaSet};
use crate::oracle::{module_ranks, stable_models_capped};
use crate::toc::{toc_program, TocOptions};

pub const DEFAULT_MAX_ATOMS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_atoms: usize,
    pub toc: TocOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { max_atoms: DEFAULT_MAX_ATOMS, toc: TocOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub status: &'static str,
    pub atoms: usize,
    pub stable_models: usize,
    pub toc_models: usize,
    /// Stable models and translation models agree on all base atoms.
    pub bijection: bool,
    /// Same, as multisets of visible projections.
    pub visible_bijection: bool,
    pub levels_agree: bool,
    pub unique_rankings: bool,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}

pub fn check_program(p: &Program, opts: CheckOptions) -> Result<CheckReport> {
    check_translation(p, &toc_program(p, opts.toc), opts.max_atoms)
}

/// Checks an arbitrary formula set over `p`'s signature as a translation of `p`.
pub fn check_translation(p: &Program, fs: &FormulaSet, max_atoms: usize) -> Result<CheckReport> {
    if p.signature.len() > max_atoms {
        return Err(Error::Resource { what: "signature size", limit: max_atoms, actual: p.signature.len() });
    }
    let stable: Vec<Interpretation> = stable_models_capped(p, max_atoms)?.into_iter().map(|(m, _)| m).collect();
    let models = enumerate_dl_models(fs)?;
    let show = |m: &Interpretation| format!("{{{}}}", m.names(&p.signature).join(", "));
    let mut failures = Vec::new();

    let mut groups: BTreeMap<Interpretation, Vec<&DlModel>> = BTreeMap::new();
    for m in &models {
        groups.entry(Interpretation::from_atoms(m.base_atoms())).or_default().push(m);
    }
    let stable_set: BTreeSet<&Interpretation> = stable.iter().collect();
    let toc_set: BTreeSet<&Interpretation> = groups.keys().collect();
    for m in stable_set.difference(&toc_set) {
        failures.push(format!("stable model {} has no translation model", show(m)));
    }
    for m in toc_set.difference(&stable_set) {
        failures.push(format!("translation model {} is not stable", show(m)));
    }
    let bijection = stable_set == toc_set;

    let visible = p.signature.visible_ids();
    let mut vis_stable: Vec<Interpretation> = stable.iter().map(|m| m.restrict(&visible)).collect();
    let mut vis_toc: Vec<Interpretation> =
        models.iter().map(|m| m.base_atoms().intersection(&visible).copied().collect()).collect();
    vis_stable.sort();
    vis_toc.sort();
    let visible_bijection = vis_stable == vis_toc;
    if !visible_bijection && bijection {
        failures.push("visible projections differ in multiplicity".to_string());
    }

    let mut unique_rankings = true;
    for (m, ms) in &groups {
        if ms.len() > 1 {
            unique_rankings = false;
            failures.push(format!("{} has {} integer assignments", show(m), ms.len()));
        }
    }

    let g = build_depgraph(p);
    let modules: Vec<_> =
        sccs(&g, p).components.into_iter().filter(|s| is_recursive(&g, s)).map(|s| module_unchecked(p, &s)).collect();
    let mut levels_agree = true;
    for m in &models {
        let base = Interpretation::from_atoms(m.base_atoms());
        for module in &modules {
            let (_, ranks) = module_ranks(p, module, &base)?;
            for &a in &module.scope {
                let expected = expected_level(&ranks.get(a), base.contains(a), module.scope.len());
                if m.level(a) != expected {
                    levels_agree = false;
                    failures.push(format!(
                        "in {} level of {} is {:?}, expected {:?}",
                        show(&base),
                        p.name(a),
                        m.level(a),
                        expected
                    ));
                }
            }
        }
    }

    let ok = bijection && visible_bijection && unique_rankings && levels_agree;
    Ok(CheckReport {
        status: if ok { "PASS" } else { "FAIL" },
        atoms: p.signature.len(),
        stable_models: stable.len(),
        toc_models: models.len(),
        bijection,
        visible_bijection,
        levels_agree,
        unique_rankings,
        failures,
    })
}

fn expected_level(rank: &Rank, in_model: bool, scope_size: usize) -> Option<i64> {
    match (in_model, rank) {
        (false, _) => Some(scope_size as i64 + 1),
        (true, Rank::Level(k)) => Some(*k as i64),
        (true, _) => None,
    }
}

/// Levels of the atoms of recursive scopes in a translation model.
pub fn model_levels(p: &Program, m: &DlModel) -> BTreeMap<AtomId, i64> {
    p.atom_ids().into_iter().filter_map(|a| m.level(a).map(|l| (a, l))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::FormulaKind;
    use crate::parser::parse_str;

    #[test]
    fn example_one_passes() {
        let p = parse_str("{b1}. {b2}. {b3}. a :- 1 <= { b1, b2, b3 }.").unwrap();
        let r = check_program(&p, CheckOptions::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.stable_models, 8);
    }

    #[test]
    fn odd_loop_passes_with_no_models() {
        let r = check_program(&parse_str("a :- not a.").unwrap(), CheckOptions::default()).unwrap();
        assert!(r.passed());
        assert_eq!((r.stable_models, r.toc_models), (0, 0));
    }

    #[test]
    fn corrupted_translation_fails() {
        let p = parse_str("a :- b. b :- a. {c}. a :- c.").unwrap();
        let fs = toc_program(&p, TocOptions::default());
        let broken = fs.without(FormulaKind::Completion);
        let r = check_translation(&p, &broken, 14).unwrap();
        assert!(!r.passed());
        assert!(!r.bijection);
    }

    #[test]
    fn weak_completion_loses_uniqueness() {
        let p = parse_str("a :- b. b :- a. {c}. a :- c.").unwrap();
        let opts = CheckOptions { toc: TocOptions { no_strong: true, ..Default::default() }, ..Default::default() };
        let r = check_program(&p, opts).unwrap();
        assert!(r.bijection);
        assert!(!r.unique_rankings);
        assert!(check_program(&p, CheckOptions::default()).unwrap().passed());
    }

    #[test]
    fn size_cap() {
        let p = parse_str("a. b. c.").unwrap();
        assert!(check_program(&p, CheckOptions { max_atoms: 2, ..Default::default() }).is_err());
    }
}
