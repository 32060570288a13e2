//! Random program generation and the corpus-wide check loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ast::{AtomId, Literal, Program, ProgramBuilder, Rule, WeightedLiteral};
use crate::check::{check_program, CheckOptions, CheckReport};
use crate::depgraph::{build_depgraph, is_recursive, sccs};
use crate::error::Result;
use crate::parser::render_program;
use crate::toc::TocOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzOptions {
    pub seed: u64,
    pub count: usize,
    pub max_atoms: usize,
    pub max_rules: usize,
    pub toc: TocOptions,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        Self { seed: 1, count: 100, max_atoms: 7, max_rules: 10, toc: TocOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub index: usize,
    pub program: String,
    pub report: CheckReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub status: &'static str,
    pub seed: u64,
    pub programs: usize,
    pub recursive: usize,
    pub stable_models: usize,
    pub first_failure: Option<Counterexample>,
}

pub fn has_recursive_scope(p: &Program) -> bool {
    let g = build_depgraph(p);
    sccs(&g, p).components.iter().any(|s| is_recursive(&g, s))
}

/// Deterministic per-program generator, independent of scheduling.
pub fn program_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64)
}

/// A random program over at most `max_atoms` atoms and `max_rules` rules,
/// mixing all rule forms. With `recursive`, draws are repeated until some
/// scope is recursive.
pub fn generate_program(rng: &mut impl Rng, max_atoms: usize, max_rules: usize, recursive: bool) -> Program {
    loop {
        let p = draw_program(rng, max_atoms.max(1), max_rules.max(1));
        if !recursive || has_recursive_scope(&p) {
            return p;
        }
    }
}

fn draw_program(rng: &mut impl Rng, max_atoms: usize, max_rules: usize) -> Program {
    let n = rng.gen_range(1..=max_atoms);
    let mut b = ProgramBuilder::new();
    let names: Vec<String> = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let atoms: Vec<AtomId> = names.iter().map(|s| b.atom(s)).collect();
    let rules = rng.gen_range(1..=max_rules);
    for _ in 0..rules {
        let head = *atoms.choose(rng).unwrap();
        let rule = match rng.gen_range(0..100) {
            0..=29 => {
                let (pos, neg) = conj_body(rng, &atoms);
                Rule::normal(head, &pos, &neg)
            }
            30..=41 => {
                let (pos, neg) = conj_body(rng, &atoms);
                Rule::choice(head, &pos, &neg)
            }
            42..=57 => {
                let lits: Vec<Literal> = agg_body(rng, &atoms, false).into_iter().map(|w| w.literal).collect();
                let lower = rng.gen_range(0..=lits.len() as u64);
                Rule::cardinality(head, lower, &lits)
            }
            58..=73 => {
                let body = agg_body(rng, &atoms, true);
                let total: u64 = body.iter().map(|w| w.weight).sum();
                let lower = rng.gen_range(0..=total + 1);
                Rule::weight(head, lower, body)
            }
            74..=89 => {
                let weighted = rng.gen_bool(0.5);
                let body = agg_body(rng, &atoms, weighted);
                let total: u64 = body.iter().map(|w| w.weight).sum();
                let lower = rng.gen_range(0..=total);
                let upper = rng.gen_range(lower.saturating_sub(1)..=total + 1);
                Rule::convex(head, lower, upper, body)
            }
            90..=95 => {
                let (pos, neg) = conj_body(rng, &atoms);
                if pos.is_empty() && neg.is_empty() {
                    Rule::fact(head)
                } else {
                    Rule::constraint(&pos, &neg)
                }
            }
            _ => Rule::fact(head),
        };
        b.rule(rule);
    }
    if rng.gen_bool(0.2) {
        b.hide(names.choose(rng).unwrap());
    }
    b.build()
}

fn conj_body(rng: &mut impl Rng, atoms: &[AtomId]) -> (Vec<AtomId>, Vec<AtomId>) {
    let len = rng.gen_range(0..=3);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for _ in 0..len {
        let a = *atoms.choose(rng).unwrap();
        if rng.gen_bool(0.7) {
            pos.push(a);
        } else {
            neg.push(a);
        }
    }
    (pos, neg)
}

fn agg_body(rng: &mut impl Rng, atoms: &[AtomId], weighted: bool) -> Vec<WeightedLiteral> {
    let len = rng.gen_range(1..=4);
    (0..len)
        .map(|_| {
            let a = *atoms.choose(rng).unwrap();
            let lit = if rng.gen_bool(0.75) { Literal::pos(a) } else { Literal::neg(a) };
            let w = if weighted { rng.gen_range(0..=4) } else { 1 };
            WeightedLiteral::new(lit, w)
        })
        .collect()
}

/// The generated corpus: program `i` is forced recursive when `i` is even.
pub fn corpus(opts: &FuzzOptions) -> Vec<Program> {
    (0..opts.count)
        .map(|i| generate_program(&mut program_rng(opts.seed, i), opts.max_atoms, opts.max_rules, i % 2 == 0))
        .collect()
}

pub fn run_fuzz(opts: &FuzzOptions) -> Result<FuzzReport> {
    let programs = corpus(opts);
    let check = CheckOptions { max_atoms: opts.max_atoms.max(1), toc: opts.toc };
    let reports: Vec<CheckReport> = programs.par_iter().map(|p| check_program(p, check)).collect::<Result<Vec<_>>>()?;
    let first_failure = reports.iter().enumerate().find(|(_, r)| !r.passed()).map(|(i, r)| Counterexample {
        index: i,
        program: render_program(&programs[i]),
        report: r.clone(),
    });
    Ok(FuzzReport {
        status: if first_failure.is_none() { "PASS" } else { "FAIL" },
        seed: opts.seed,
        programs: programs.len(),
        recursive: programs.iter().filter(|p| has_recursive_scope(p)).count(),
        stable_models: reports.iter().map(|r| r.stable_models).sum(),
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_str;

    #[test]
    fn corpus_is_deterministic_and_parseable() {
        let opts = FuzzOptions { count: 40, ..Default::default() };
        let a = corpus(&opts);
        let b = corpus(&opts);
        assert_eq!(a, b);
        for p in &a {
            p.validate().unwrap();
            let text = render_program(p);
            assert_eq!(&parse_str(&text).unwrap(), p, "{text}");
        }
        assert!(a.iter().filter(|p| has_recursive_scope(p)).count() >= 20);
    }

    #[test]
    fn empty_run_passes() {
        let r = run_fuzz(&FuzzOptions { count: 0, ..Default::default() }).unwrap();
        assert_eq!(r.status, "PASS");
        assert_eq!(r.programs, 0);
    }

    #[test]
    fn small_run_passes() {
        let r = run_fuzz(&FuzzOptions { count: 30, max_atoms: 5, ..Default::default() }).unwrap();
        assert!(r.first_failure.is_none(), "{:#?}", r.first_failure);
    }
}
