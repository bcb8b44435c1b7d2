//! Fuelled iteration and the outcome types shared by both engines.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::Result;
use crate::eval::Interpretation;
use crate::table::AnswerTable;
use crate::term::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    /// Maximum number of operator applications.
    pub fuel: usize,
    /// Maximum number of atoms (or table entries) held at once.
    pub max_facts: usize,
    /// Maximum number of rule firings within one operator application.
    pub max_derivations: usize,
    /// Recompute every rule against the whole interpretation at each step.
    pub naive: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fuel: 10_000,
            max_facts: 20_000,
            max_derivations: 250_000,
            naive: false,
        }
    }
}

impl EvalConfig {
    pub fn with_fuel(fuel: usize) -> EvalConfig {
        EvalConfig {
            fuel,
            ..EvalConfig::default()
        }
    }
}

/// Which budget ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Limit {
    Steps,
    Facts,
    Derivations,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::Steps => "steps",
            Limit::Facts => "facts",
            Limit::Derivations => "derivations",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixpointResult<V> {
    Converged { value: V, steps: usize },
    FuelExhausted { partial: V, fuel: usize, limit: Limit },
}

impl<V> FixpointResult<V> {
    pub fn converged(self) -> Option<V> {
        match self {
            FixpointResult::Converged { value, .. } => Some(value),
            FixpointResult::FuelExhausted { .. } => None,
        }
    }

    pub fn value(&self) -> &V {
        match self {
            FixpointResult::Converged { value, .. } => value,
            FixpointResult::FuelExhausted { partial, .. } => partial,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, FixpointResult::Converged { .. })
    }
}

/// Result of one step of a fuelled iteration.
pub enum Step<V> {
    Next(V),
    /// The step itself ran out of some budget.
    OutOfBudget(Limit),
}

/// Iterates `step` from `start` until it returns a value equal to its
/// input or `fuel` applications have been made. `step` is expected to
/// accumulate, so the values form an ascending chain.
pub fn kleene_lfp<V, F>(start: V, fuel: usize, mut step: F) -> Result<FixpointResult<V>>
where
    V: PartialEq,
    F: FnMut(&V) -> Result<Step<V>>,
{
    let mut current = start;
    for applied in 1..=fuel {
        match step(&current)? {
            Step::Next(next) if next == current => {
                return Ok(FixpointResult::Converged {
                    value: current,
                    steps: applied,
                })
            }
            Step::Next(next) => current = next,
            Step::OutOfBudget(limit) => {
                return Ok(FixpointResult::FuelExhausted {
                    partial: current,
                    fuel,
                    limit,
                })
            }
        }
    }
    Ok(FixpointResult::FuelExhausted {
        partial: current,
        fuel,
        limit: Limit::Steps,
    })
}

/// A whole-program result: the answer atoms and the aggregated table
/// they come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub answers: Interpretation,
    pub table: AnswerTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    /// Position of the stratum that did not converge.
    pub stratum: usize,
    pub predicates: BTreeSet<Name>,
    /// Atoms known when evaluation stopped, lower strata included.
    pub partial: Interpretation,
    pub fuel: usize,
    pub limit: Limit,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preds: Vec<&str> = self.predicates.iter().map(|p| &**p).collect();
        write!(
            f,
            "no fixpoint within budget in stratum {} ({}): {} limit reached (fuel {}), {} atoms known",
            self.stratum,
            preds.join(", "),
            self.limit,
            self.fuel,
            self.partial.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Converged(Model),
    Diverged(Divergence),
}

impl Outcome {
    pub fn answers(&self) -> Option<&Interpretation> {
        match self {
            Outcome::Converged(m) => Some(&m.answers),
            Outcome::Diverged(_) => None,
        }
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            Outcome::Converged(m) => Some(m),
            Outcome::Diverged(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_steps_until_stable() {
        let r = kleene_lfp(0u32, 100, |&x| Ok(Step::Next((x + 1).min(5)))).unwrap();
        assert_eq!(r, FixpointResult::Converged { value: 5, steps: 6 });
    }

    #[test]
    fn runs_out_of_fuel() {
        let r = kleene_lfp(0u32, 10, |&x| Ok(Step::Next(x + 1))).unwrap();
        assert_eq!(
            r,
            FixpointResult::FuelExhausted {
                partial: 10,
                fuel: 10,
                limit: Limit::Steps
            }
        );
    }

    #[test]
    fn budget_stop_keeps_last_value() {
        let r = kleene_lfp(0u32, 10, |&x| {
            Ok(if x < 3 {
                Step::Next(x + 1)
            } else {
                Step::OutOfBudget(Limit::Facts)
            })
        })
        .unwrap();
        assert_eq!(r.value(), &3);
        assert!(!r.is_converged());
    }
}
