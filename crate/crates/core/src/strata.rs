//! Dependency strata: strongly connected components of the "head uses body
//! predicate" graph, listed so that every stratum comes after the strata it
//! uses.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::program::{Clause, Literal, Program};
use crate::term::{write_name, Name};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    /// Strata in evaluation order.
    pub strata: Vec<BTreeSet<Name>>,
    /// For each stratum, the indices of the strata it uses directly.
    pub uses: Vec<BTreeSet<usize>>,
}

impl Stratification {
    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn stratum_of(&self, pred: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.contains(pred))
    }

    /// Strata that stratum `i` depends on, directly or not.
    pub fn below(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.uses[i].iter().copied().collect();
        while let Some(j) = stack.pop() {
            if seen.insert(j) {
                stack.extend(self.uses[j].iter().copied());
            }
        }
        seen
    }

    /// Clauses whose head belongs to stratum `i`.
    pub fn clauses<'a>(&self, program: &'a Program, i: usize) -> Vec<&'a Clause> {
        program
            .clauses
            .iter()
            .filter(|c| self.strata[i].contains(&c.head.pred))
            .collect()
    }
}

impl fmt::Display for Stratification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, stratum) in self.strata.iter().enumerate() {
            write!(f, "{i}: {{")?;
            for (j, p) in stratum.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write_name(f, p)?;
            }
            f.write_str("}")?;
            if !self.uses[i].is_empty() {
                let uses: Vec<String> = self.uses[i].iter().map(|u| u.to_string()).collect();
                write!(f, " uses {}", uses.join(", "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `(head, body)` predicate pairs over all clauses.
pub fn dependencies(program: &Program) -> BTreeSet<(Name, Name)> {
    let mut out = BTreeSet::new();
    for clause in &program.clauses {
        for lit in &clause.body {
            if let Literal::Call(call) = lit {
                out.insert((clause.head.pred.clone(), call.pred.clone()));
            }
        }
    }
    out
}

pub fn stratify(program: &Program) -> Stratification {
    let preds: Vec<Name> = program.predicates().into_iter().collect();
    let mut graph = DiGraph::<Name, ()>::new();
    let nodes: BTreeMap<Name, _> = preds.iter().map(|p| (p.clone(), graph.add_node(p.clone()))).collect();
    let deps = dependencies(program);
    for (head, body) in &deps {
        graph.add_edge(nodes[body], nodes[head], ());
    }

    let components: Vec<BTreeSet<Name>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| c.into_iter().map(|n| graph[n].clone()).collect())
        .collect();
    let component_of: BTreeMap<Name, usize> = components
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |p| (p.clone(), i)))
        .collect();

    let mut uses = vec![BTreeSet::new(); components.len()];
    let mut users = vec![BTreeSet::new(); components.len()];
    for (head, body) in &deps {
        let (h, b) = (component_of[head], component_of[body]);
        if h != b {
            uses[h].insert(b);
            users[b].insert(h);
        }
    }

    // Kahn's algorithm, always taking the ready component with the least
    // predicate name.
    let least = |i: usize| components[i].iter().next().cloned().expect("components are nonempty");
    let mut pending: Vec<usize> = uses.iter().map(BTreeSet::len).collect();
    let mut ready: BinaryHeap<Reverse<(Name, usize)>> = (0..components.len())
        .filter(|&i| pending[i] == 0)
        .map(|i| Reverse((least(i), i)))
        .collect();
    let mut order = Vec::with_capacity(components.len());
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &u in &users[i] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.push(Reverse((least(u), u)));
            }
        }
    }

    let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(pos, &c)| (c, pos)).collect();
    Stratification {
        strata: order.iter().map(|&c| components[c].clone()).collect(),
        uses: order
            .iter()
            .map(|&c| uses[c].iter().map(|u| position[u]).collect())
            .collect(),
    }
}
