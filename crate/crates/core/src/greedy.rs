//! Greedy semantics: tables aggregated after every step, as tabling engines
//! with answer subsumption do.

use crate::error::Result;
use crate::eval::{FactIndex, Interpretation};
use crate::fixpoint::{kleene_lfp, Divergence, EvalConfig, FixpointResult, Limit, Model, Outcome, Step};
use crate::program::Program;
use crate::reference::StratumProgram;
use crate::strata::stratify;
use crate::table::{embed, rho, AnswerTable, Specs};

/// Extract the true atoms, apply the rules once, re-aggregate.
pub fn greedy_step(program: &Program, specs: &Specs, t: &AnswerTable) -> Result<AnswerTable> {
    StratumProgram::whole(program).greedy_step(specs, t)
}

/// Inflationary iteration of `greedy_step` from the empty table, whole
/// program.
pub fn greedy_fixpoint(program: &Program, specs: &Specs, config: &EvalConfig) -> Result<FixpointResult<AnswerTable>> {
    StratumProgram::whole(program).greedy_lfp(specs, config, &mut |_| {})
}

pub fn stratified_greedy_semantics(program: &Program, config: &EvalConfig) -> Result<Outcome> {
    let specs = Specs::from_program(program);
    let strata = stratify(program);
    let mut answers = Interpretation::new();
    for i in 0..strata.len() {
        let stratum = StratumProgram::new(program, &strata, i, &answers);
        match stratum.greedy_lfp(&specs, config, &mut |_| {})? {
            FixpointResult::Converged { value, .. } => answers.extend(rho(&specs, &value)?),
            FixpointResult::FuelExhausted { partial, fuel, limit } => {
                answers.extend(rho(&specs, &partial)?);
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

impl StratumProgram {
    pub fn greedy_step(&self, specs: &Specs, t: &AnswerTable) -> Result<AnswerTable> {
        embed(specs, &self.tp(&rho(specs, t)?)?)
    }

    /// Iterates `t <- t join greedy_step(t)` from the empty table. Every
    /// table of the chain, the first and last included, is passed to
    /// `observe`.
    pub fn greedy_lfp(
        &self,
        specs: &Specs,
        config: &EvalConfig,
        observe: &mut dyn FnMut(&AnswerTable),
    ) -> Result<FixpointResult<AnswerTable>> {
        observe(&AnswerTable::new());
        if config.naive {
            kleene_lfp(AnswerTable::new(), config.fuel, |t| {
                let atoms = rho(specs, t)?;
                let Some(derived) = self.unit().tp_bounded(&FactIndex::new(&atoms), config.max_derivations)? else {
                    return Ok(Step::OutOfBudget(Limit::Derivations));
                };
                let next = t.join(specs, &embed(specs, &derived)?)?;
                if next.len() > config.max_facts {
                    return Ok(Step::OutOfBudget(Limit::Facts));
                }
                if next != *t {
                    observe(&next);
                }
                Ok(Step::Next(next))
            })
        } else {
            self.greedy_seminaive(specs, config, observe)
        }
    }

    /// Same chain as the naive iteration. Derivations using only atoms
    /// already true in the previous table were joined in then, so only
    /// rules reading a newly true atom need firing.
    fn greedy_seminaive(
        &self,
        specs: &Specs,
        config: &EvalConfig,
        observe: &mut dyn FnMut(&AnswerTable),
    ) -> Result<FixpointResult<AnswerTable>> {
        let mut table = AnswerTable::new();
        let mut previous = Interpretation::new();
        for applied in 1..=config.fuel {
            let atoms = rho(specs, &table)?;
            let derived = if applied == 1 {
                self.unit().tp_bounded(&FactIndex::default(), config.max_derivations)?
            } else {
                let delta: Interpretation = atoms.difference(&previous).cloned().collect();
                self.unit()
                    .tp_delta(&FactIndex::new(&atoms), &FactIndex::new(&delta), config.max_derivations)?
            };
            let Some(derived) = derived else {
                return Ok(FixpointResult::FuelExhausted {
                    partial: table,
                    fuel: config.fuel,
                    limit: Limit::Derivations,
                });
            };
            let mut next = table.clone();
            let mut changed = false;
            for atom in &derived {
                let (key, value) = specs.split(atom)?;
                changed |= next.join_entry(specs, key, value)?;
            }
            if !changed {
                return Ok(FixpointResult::Converged {
                    value: table,
                    steps: applied,
                });
            }
            if next.len() > config.max_facts {
                return Ok(FixpointResult::FuelExhausted {
                    partial: table,
                    fuel: config.fuel,
                    limit: Limit::Facts,
                });
            }
            observe(&next);
            previous = atoms;
            table = next;
        }
        Ok(FixpointResult::FuelExhausted {
            partial: table,
            fuel: config.fuel,
            limit: Limit::Steps,
        })
    }
}
