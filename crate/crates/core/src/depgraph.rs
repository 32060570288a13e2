//! Positive dependency graph, strongly connected components and the program
//! modules they induce.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::ast::{AtomId, Program, Rule};
use crate::error::{Error, Result};

/// `a -> b` iff some rule defining `a` has `b` as a positive body literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    pub vertices: Vec<AtomId>,
    pub edges: BTreeSet<(AtomId, AtomId)>,
}

impl DepGraph {
    pub fn successors(&self, a: AtomId) -> impl Iterator<Item = AtomId> + '_ {
        self.edges.range((a, AtomId(0))..=(a, AtomId(u32::MAX))).map(|&(_, b)| b)
    }

    pub fn has_edge(&self, a: AtomId, b: AtomId) -> bool {
        self.edges.contains(&(a, b))
    }
}

pub fn build_depgraph(p: &Program) -> DepGraph {
    let edges = p
        .rules
        .iter()
        .filter_map(|r| r.head.map(|h| (h, r)))
        .flat_map(|(h, r)| r.positive_atoms().map(move |b| (h, b)))
        .collect();
    DepGraph { vertices: p.atom_ids(), edges }
}

/// Components in dependency order: every edge leaving a component points to
/// an earlier one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    pub components: Vec<BTreeSet<AtomId>>,
    pub index: BTreeMap<AtomId, usize>,
}

impl SccPartition {
    pub fn component_of(&self, a: AtomId) -> &BTreeSet<AtomId> {
        &self.components[self.index[&a]]
    }

    pub fn position(&self, scope: &BTreeSet<AtomId>) -> Option<usize> {
        let first = scope.iter().next()?;
        let i = *self.index.get(first)?;
        (self.components[i] == *scope).then_some(i)
    }
}

/// Computes the SCCs; ties in the topological order are broken by the
/// smallest member name.
pub fn sccs(g: &DepGraph, p: &Program) -> SccPartition {
    let mut graph = DiGraph::<AtomId, ()>::new();
    let nodes: BTreeMap<AtomId, _> = g.vertices.iter().map(|&a| (a, graph.add_node(a))).collect();
    for &(a, b) in &g.edges {
        graph.add_edge(nodes[&a], nodes[&b], ());
    }
    let raw: Vec<BTreeSet<AtomId>> =
        tarjan_scc(&graph).into_iter().map(|c| c.into_iter().map(|n| graph[n]).collect()).collect();

    let mut comp_of = BTreeMap::new();
    for (i, c) in raw.iter().enumerate() {
        for &a in c {
            comp_of.insert(a, i);
        }
    }
    // successors between components, and how many each still waits for
    let mut waiting = vec![BTreeSet::new(); raw.len()];
    let mut dependents = vec![BTreeSet::new(); raw.len()];
    for &(a, b) in &g.edges {
        let (ca, cb) = (comp_of[&a], comp_of[&b]);
        if ca != cb {
            waiting[ca].insert(cb);
            dependents[cb].insert(ca);
        }
    }
    let key = |i: usize| raw[i].iter().map(|&a| p.name(a)).min().unwrap_or("").to_string();
    let mut ready: BinaryHeap<Reverse<(String, usize)>> =
        (0..raw.len()).filter(|&i| waiting[i].is_empty()).map(|i| Reverse((key(i), i))).collect();
    let mut order = Vec::with_capacity(raw.len());
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &d in &dependents[i] {
            waiting[d].remove(&i);
            if waiting[d].is_empty() {
                ready.push(Reverse((key(d), d)));
            }
        }
    }
    let components: Vec<BTreeSet<AtomId>> = order.into_iter().map(|i| raw[i].clone()).collect();
    let index = components.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |&a| (a, i))).collect();
    SccPartition { components, index }
}

/// Rules defining the atoms of one SCC, with their positive inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub scope: BTreeSet<AtomId>,
    /// Indices into the program's rule list.
    pub rules: Vec<usize>,
    pub inputs: BTreeSet<AtomId>,
}

impl Module {
    pub fn rules<'a>(&'a self, p: &'a Program) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().map(move |&i| &p.rules[i])
    }
}

pub fn module_of(p: &Program, scope: &BTreeSet<AtomId>) -> Result<Module> {
    let parts = sccs(&build_depgraph(p), p);
    if parts.position(scope).is_none() {
        return Err(Error::invalid("scope is not a strongly connected component"));
    }
    Ok(module_unchecked(p, scope))
}

pub(crate) fn module_unchecked(p: &Program, scope: &BTreeSet<AtomId>) -> Module {
    let rules: Vec<usize> = p
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.head.is_some_and(|h| scope.contains(&h)))
        .map(|(i, _)| i)
        .collect();
    let inputs = rules.iter().flat_map(|&i| p.rules[i].positive_atoms()).filter(|b| !scope.contains(b)).collect();
    Module { scope: scope.clone(), rules, inputs }
}

/// A scope needs ranking constraints iff it has a cycle: more than one atom,
/// or a single atom with a positive self-loop.
pub fn is_recursive(g: &DepGraph, scope: &BTreeSet<AtomId>) -> bool {
    match scope.len() {
        0 => false,
        1 => {
            let a = *scope.iter().next().unwrap();
            g.has_edge(a, a)
        }
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_str;

    fn names(p: &Program, c: &BTreeSet<AtomId>) -> Vec<String> {
        c.iter().map(|&a| p.name(a).to_string()).collect()
    }

    #[test]
    fn self_loop() {
        let p = parse_str("a :- a.").unwrap();
        let g = build_depgraph(&p);
        let a = p.atom("a").unwrap();
        assert_eq!(g.edges, BTreeSet::from([(a, a)]));
        assert!(is_recursive(&g, &BTreeSet::from([a])));
    }

    #[test]
    fn negation_and_choice_add_no_edges() {
        assert!(build_depgraph(&parse_str("a :- not b.").unwrap()).edges.is_empty());
        assert!(build_depgraph(&parse_str("{a}.").unwrap()).edges.is_empty());
    }

    #[test]
    fn two_cycle_is_one_component() {
        let p = parse_str("a :- b. b :- a.").unwrap();
        let parts = sccs(&build_depgraph(&p), &p);
        assert_eq!(parts.components.len(), 1);
        assert_eq!(names(&p, &parts.components[0]), ["a", "b"]);
    }

    #[test]
    fn chain_orders_dependencies_first() {
        let p = parse_str("a :- b. b :- c. #atom d.").unwrap();
        let parts = sccs(&build_depgraph(&p), &p);
        let order: Vec<_> = parts.components.iter().map(|c| names(&p, c).join("")).collect();
        assert_eq!(order, ["c", "b", "a", "d"]);
    }

    #[test]
    fn example_three_component() {
        let mut text = String::new();
        for i in 1..=4 {
            text.push_str(&format!("a :- b{i}. b{i} :- a.\n"));
        }
        let p = parse_str(&text).unwrap();
        let parts = sccs(&build_depgraph(&p), &p);
        assert_eq!(parts.components.len(), 1);
        assert_eq!(parts.components[0].len(), 5);
    }

    #[test]
    fn module_inputs() {
        let p = parse_str("a :- b. b :- a. b :- c.").unwrap();
        let s: BTreeSet<_> = [p.atom("a").unwrap(), p.atom("b").unwrap()].into();
        let m = module_of(&p, &s).unwrap();
        assert_eq!(m.rules, vec![0, 1, 2]);
        assert_eq!(m.inputs, BTreeSet::from([p.atom("c").unwrap()]));
        assert!(module_of(&p, &BTreeSet::from([p.atom("a").unwrap()])).is_err());
    }

    #[test]
    fn module_ignores_negative_inputs() {
        let p = parse_str("a :- not b.").unwrap();
        let m = module_of(&p, &BTreeSet::from([p.atom("a").unwrap()])).unwrap();
        assert_eq!(m.rules, vec![0]);
        assert!(m.inputs.is_empty());
    }

    #[test]
    fn example_five_module_has_no_inputs() {
        let p = parse_str("a :- 2 <= {b1, b2, b3, b4}. b1 :- a. b2 :- a. b3 :- a. b4 :- a.").unwrap();
        let parts = sccs(&build_depgraph(&p), &p);
        let m = module_of(&p, &parts.components[0]).unwrap();
        assert_eq!(m.scope.len(), 5);
        assert!(m.inputs.is_empty());
    }

    #[test]
    fn constraints_are_not_in_modules() {
        let p = parse_str("a :- b. :- a.").unwrap();
        let m = module_of(&p, &BTreeSet::from([p.atom("a").unwrap()])).unwrap();
        assert_eq!(m.rules, vec![0]);
    }
}
