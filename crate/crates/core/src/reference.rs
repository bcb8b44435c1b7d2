//! Aggregate-at-the-end semantics: the least model of the program closed
//! under per-key joins, aggregated once it is complete, stratum by stratum.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::eval::{FactIndex, Interpretation, Unit};
use crate::fixpoint::{kleene_lfp, Divergence, EvalConfig, FixpointResult, Limit, Model, Outcome, Step};
use crate::lattice::{join_values, LatticeValue};
use crate::program::{Clause, Program};
use crate::strata::{stratify, Stratification};
use crate::table::{embed, rho, Key, Specs};
use crate::term::{Atom, Name};

/// One immediate consequence step of the whole program.
pub fn tp_step(program: &Program, i: &Interpretation) -> Result<Interpretation> {
    Unit::new(&program.clauses, Vec::new()).tp(i)
}

/// One immediate consequence step followed by closing every answer group
/// under binary joins.
pub fn tphat_step(program: &Program, specs: &Specs, i: &Interpretation) -> Result<Interpretation> {
    join_closure(specs, &tp_step(program, i)?)
}

/// Every atom obtained by joining a nonempty finite set of atoms sharing a
/// key in `atoms`.
pub fn join_closure(specs: &Specs, atoms: &Interpretation) -> Result<Interpretation> {
    let mut closure = Closure::default();
    let mut out = Interpretation::new();
    for atom in atoms {
        closure.add(specs, atom, usize::MAX, &mut out)?;
    }
    Ok(out)
}

/// One atom per key: the join of everything `i` says about that key.
pub fn aggregate_model(specs: &Specs, i: &Interpretation) -> Result<Interpretation> {
    rho(specs, &embed(specs, i)?)
}

/// Least fixpoint of the immediate consequence operator, whole program.
pub fn lfp_tp(program: &Program, config: &EvalConfig) -> Result<FixpointResult<Interpretation>> {
    let specs = Specs::from_program(program);
    StratumProgram::whole(program).lfp(&specs, false, config)
}

/// Least fixpoint of the join-closed operator, whole program.
pub fn lfp_tphat(program: &Program, config: &EvalConfig) -> Result<FixpointResult<Interpretation>> {
    let specs = Specs::from_program(program);
    StratumProgram::whole(program).lfp(&specs, true, config)
}

/// Strata evaluated in order, each on its own clauses plus the aggregated
/// answers of the strata below it, each aggregated once its join-closed
/// least model is complete.
pub fn stratified_reference_semantics(program: &Program, config: &EvalConfig) -> Result<Outcome> {
    let specs = Specs::from_program(program);
    let strata = stratify(program);
    let mut answers = Interpretation::new();
    for i in 0..strata.len() {
        let stratum = StratumProgram::new(program, &strata, i, &answers);
        match stratum.lfp(&specs, true, config)? {
            FixpointResult::Converged { value, .. } => answers.extend(aggregate_model(&specs, &value)?),
            FixpointResult::FuelExhausted { partial, fuel, limit } => {
                answers.extend(partial);
                return Ok(Outcome::Diverged(Divergence {
                    stratum: i,
                    predicates: strata.strata[i].clone(),
                    partial: answers,
                    fuel,
                    limit,
                }));
            }
        }
    }
    let table = embed(&specs, &answers)?;
    Ok(Outcome::Converged(Model { answers, table }))
}

/// The clauses of one stratum together with the answers of the strata it
/// depends on, which act as facts.
#[derive(Debug, Clone)]
pub struct StratumProgram {
    pub index: usize,
    pub predicates: BTreeSet<Name>,
    unit: Unit,
}

impl StratumProgram {
    /// Stratum `i`, reading lower strata answers from `known`.
    pub fn new(program: &Program, strata: &Stratification, i: usize, known: &Interpretation) -> StratumProgram {
        let below: BTreeSet<&Name> = strata.below(i).into_iter().flat_map(|j| strata.strata[j].iter()).collect();
        let base = known.iter().filter(|a| below.contains(&a.pred)).cloned().collect();
        StratumProgram {
            index: i,
            predicates: strata.strata[i].clone(),
            unit: Unit::new(strata.clauses(program, i), base),
        }
    }

    /// The whole program as a single unit.
    pub fn whole(program: &Program) -> StratumProgram {
        StratumProgram {
            index: 0,
            predicates: program.predicates(),
            unit: Unit::new(&program.clauses, Vec::new()),
        }
    }

    pub fn from_clauses<'a, I: IntoIterator<Item = &'a Clause>>(clauses: I, base: Vec<Atom>) -> StratumProgram {
        let clauses: Vec<&Clause> = clauses.into_iter().collect();
        StratumProgram {
            index: 0,
            predicates: clauses.iter().map(|c| c.head.pred.clone()).collect(),
            unit: Unit::new(clauses, base),
        }
    }

    pub(crate) fn unit(&self) -> &Unit {
        &self.unit
    }

    pub fn tp(&self, i: &Interpretation) -> Result<Interpretation> {
        self.unit.tp(i)
    }

    pub fn tphat(&self, specs: &Specs, i: &Interpretation) -> Result<Interpretation> {
        join_closure(specs, &self.unit.tp(i)?)
    }

    /// Least fixpoint of `tphat` (or of `tp` when `closed` is false),
    /// iterated from the empty interpretation.
    pub fn lfp(&self, specs: &Specs, closed: bool, config: &EvalConfig) -> Result<FixpointResult<Interpretation>> {
        if config.naive {
            self.lfp_naive(specs, closed, config)
        } else {
            self.lfp_seminaive(specs, closed, config)
        }
    }

    fn lfp_naive(&self, specs: &Specs, closed: bool, config: &EvalConfig) -> Result<FixpointResult<Interpretation>> {
        kleene_lfp(Interpretation::new(), config.fuel, |x| {
            let Some(derived) = self.unit.tp_bounded(&FactIndex::new(x), config.max_derivations)? else {
                return Ok(Step::OutOfBudget(Limit::Derivations));
            };
            let derived = if closed {
                let mut closure = Closure::default();
                let mut out = Interpretation::new();
                for atom in &derived {
                    if !closure.add(specs, atom, config.max_facts, &mut out)? {
                        return Ok(Step::OutOfBudget(Limit::Facts));
                    }
                }
                out
            } else {
                derived
            };
            let mut next = x.clone();
            next.extend(derived);
            if next.len() > config.max_facts {
                return Ok(Step::OutOfBudget(Limit::Facts));
            }
            Ok(Step::Next(next))
        })
    }

    /// Produces the same chain as `lfp_naive`, firing only rules that use
    /// an atom added in the previous step.
    fn lfp_seminaive(&self, specs: &Specs, closed: bool, config: &EvalConfig) -> Result<FixpointResult<Interpretation>> {
        let mut current = Interpretation::new();
        let mut index = FactIndex::default();
        let mut delta = FactIndex::default();
        let mut closure = Closure::default();
        for applied in 1..=config.fuel {
            let derived = if applied == 1 {
                self.unit.tp_bounded(&index, config.max_derivations)?
            } else {
                self.unit.tp_delta(&index, &delta, config.max_derivations)?
            };
            let exhausted = |limit| FixpointResult::FuelExhausted {
                partial: current.clone(),
                fuel: config.fuel,
                limit,
            };
            let Some(derived) = derived else {
                return Ok(exhausted(Limit::Derivations));
            };
            let mut fresh = Interpretation::new();
            if closed {
                for atom in &derived {
                    if !closure.add(specs, atom, config.max_facts, &mut fresh)? {
                        return Ok(exhausted(Limit::Facts));
                    }
                }
            } else {
                fresh = derived;
            }
            fresh.retain(|a| !current.contains(a));
            if fresh.is_empty() {
                return Ok(FixpointResult::Converged {
                    value: current,
                    steps: applied,
                });
            }
            if current.len() + fresh.len() > config.max_facts {
                return Ok(exhausted(Limit::Facts));
            }
            for atom in &fresh {
                index.insert(atom);
            }
            delta = FactIndex::new(&fresh);
            current.extend(fresh);
        }
        Ok(FixpointResult::FuelExhausted {
            partial: current,
            fuel: config.fuel,
            limit: Limit::Steps,
        })
    }
}

/// Per-key sets of values closed under binary join.
#[derive(Debug, Default)]
struct Closure {
    groups: BTreeMap<Key, BTreeSet<LatticeValue>>,
    size: usize,
}

impl Closure {
    /// Adds one atom's value to its group and saturates the group, putting
    /// the atoms of all values new to the closure into `out`. Returns false
    /// when the closure would exceed `cap` values.
    fn add(&mut self, specs: &Specs, atom: &Atom, cap: usize, out: &mut Interpretation) -> Result<bool> {
        let (key, value) = specs.split(atom)?;
        let lattice = specs.lattice(&key.pred);
        let group = self.groups.entry(key.clone()).or_default();
        let mut pending = vec![value];
        while let Some(v) = pending.pop() {
            if group.contains(&v) {
                continue;
            }
            // Joins in a chain return one of their arguments.
            let pairs = if lattice.is_linear() { None } else { Some(group.iter()) };
            for u in pairs.into_iter().flatten() {
                let j = join_values(&lattice, u, &v)?;
                if j != v && !group.contains(&j) {
                    pending.push(j);
                }
            }
            out.insert(specs.atom(&key, &v)?);
            group.insert(v);
            self.size += 1;
            if self.size > cap {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
