//! Searches for inputs on which aggregating early changes what the rules
//! derive, and compares the two engines end to end.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::Interpretation;
use crate::fixpoint::{EvalConfig, FixpointResult, Outcome};
use crate::greedy::stratified_greedy_semantics;
use crate::lattice::LatticeValue;
use crate::program::Program;
use crate::reference::{aggregate_model, stratified_reference_semantics, StratumProgram};
use crate::strata::stratify;
use crate::table::{embed, rho, AnswerTable, Key, Specs};
use crate::term::Atom;

/// Largest subset drawn by the sampled strategy.
pub const MAX_SAMPLE_SIZE: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every subset of each stratum's universe, smallest first.
    Exhaustive { max_atoms: usize },
    /// Seeded random subsets of at most `MAX_SAMPLE_SIZE` atoms.
    Sampled { samples: usize, seed: u64 },
    /// The interpretations visited by the greedy engine.
    Trace,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Exhaustive { max_atoms } => write!(f, "exhaustive (max {max_atoms} atoms)"),
            Strategy::Sampled { samples, seed } => write!(f, "sampled ({samples} samples, seed {seed})"),
            Strategy::Trace => f.write_str("trace"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub stratum: usize,
    pub witness: Interpretation,
    pub lhs: AnswerTable,
    pub rhs: AnswerTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    NoViolationFound,
    Violation(Violation),
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    /// Union of the atoms subsets were drawn from.
    pub universe: Interpretation,
    /// False when some stratum's least model did not converge, so the
    /// universe is only what was seen within budget.
    pub universe_complete: bool,
    pub strategy: Strategy,
    pub subsets_checked: usize,
}

/// Which equation a check compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Condition {
    /// Aggregated consequences of X against those of the aggregate of X.
    Correctness,
    /// Aggregated join-closed consequences of X against the greedy step on
    /// the aggregate of X.
    Fusion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Universe {
    Complete(Interpretation),
    /// The least model did not converge within budget, or has more atoms
    /// than allowed; holds the atoms seen.
    Uncapped(Interpretation),
}

/// The join-closed least model, stratum by stratum, if it converges and
/// has at most `cap` atoms.
pub fn atom_universe(program: &Program, config: &EvalConfig, cap: usize) -> Result<Universe> {
    let strata = stratum_universes(program, config)?;
    let mut all = Interpretation::new();
    let mut complete = true;
    for s in strata {
        complete &= s.complete;
        all.extend(s.atoms);
    }
    if complete && all.len() <= cap {
        Ok(Universe::Complete(all))
    } else {
        Ok(Universe::Uncapped(all))
    }
}

struct StratumUniverse {
    program: StratumProgram,
    atoms: Interpretation,
    complete: bool,
}

/// Each stratum with the join-closed least model of its clauses over the
/// aggregated lower strata. Stops after the first stratum that does not
/// converge.
fn stratum_universes(program: &Program, config: &EvalConfig) -> Result<Vec<StratumUniverse>> {
    let specs = Specs::from_program(program);
    let strata = stratify(program);
    let mut known = Interpretation::new();
    let mut out = Vec::new();
    for i in 0..strata.len() {
        let stratum = StratumProgram::new(program, &strata, i, &known);
        match stratum.lfp(&specs, true, config)? {
            FixpointResult::Converged { value, .. } => {
                known.extend(aggregate_model(&specs, &value)?);
                out.push(StratumUniverse {
                    program: stratum,
                    atoms: value,
                    complete: true,
                });
            }
            FixpointResult::FuelExhausted { partial, .. } => {
                out.push(StratumUniverse {
                    program: stratum,
                    atoms: partial,
                    complete: false,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Compares the aggregated consequences of each tested X with those of the
/// aggregate of X.
pub fn check_correctness(program: &Program, strategy: Strategy, config: &EvalConfig) -> Result<CheckReport> {
    check(program, strategy, config, Condition::Correctness)
}

/// Compares aggregating after the join-closed step with the greedy step
/// applied to the aggregate. Also confirms that join closure does not
/// change aggregated consequences; if it does, that is an internal error.
pub fn check_fusion_condition(program: &Program, strategy: Strategy, config: &EvalConfig) -> Result<CheckReport> {
    check(program, strategy, config, Condition::Fusion)
}

/// Both sides of the tested equation on `x`, for stratum `stratum`.
fn sides(
    stratum: &StratumProgram,
    specs: &Specs,
    x: &Interpretation,
    condition: Condition,
) -> Result<(AnswerTable, AnswerTable)> {
    let direct = embed(specs, &stratum.tp(x)?)?;
    let rhs = embed(specs, &stratum.tp(&rho(specs, &embed(specs, x)?)?)?)?;
    match condition {
        Condition::Correctness => Ok((direct, rhs)),
        Condition::Fusion => {
            let closed = embed(specs, &stratum.tphat(specs, x)?)?;
            if closed != direct {
                return Err(Error::Internal(format!(
                    "join closure changed aggregated consequences of {}: {} vs {}",
                    show_set(x),
                    closed,
                    direct
                )));
            }
            Ok((closed, rhs))
        }
    }
}

/// Recomputes both sides on the witness and confirms they differ.
pub fn reverify(program: &Program, violation: &Violation, config: &EvalConfig) -> Result<bool> {
    let specs = Specs::from_program(program);
    let strata = stratum_universes(program, config)?;
    let Some(s) = strata.get(violation.stratum) else {
        return Ok(false);
    };
    let (lhs, rhs) = sides(&s.program, &specs, &violation.witness, Condition::Correctness)?;
    Ok(lhs != rhs && lhs == violation.lhs && rhs == violation.rhs)
}

fn check(program: &Program, strategy: Strategy, config: &EvalConfig, condition: Condition) -> Result<CheckReport> {
    let specs = Specs::from_program(program);
    let mut report = CheckReport {
        verdict: Verdict::NoViolationFound,
        universe: Interpretation::new(),
        universe_complete: true,
        strategy,
        subsets_checked: 0,
    };
    let test = |stratum: &StratumProgram, x: Interpretation, report: &mut CheckReport| -> Result<bool> {
        report.subsets_checked += 1;
        let (lhs, rhs) = sides(stratum, &specs, &x, condition)?;
        if lhs != rhs {
            report.verdict = Verdict::Violation(Violation {
                stratum: stratum.index,
                witness: x,
                lhs,
                rhs,
            });
            return Ok(true);
        }
        Ok(false)
    };

    if strategy == Strategy::Trace {
        let strata = stratify(program);
        let mut answers = Interpretation::new();
        for i in 0..strata.len() {
            let stratum = StratumProgram::new(program, &strata, i, &answers);
            let mut visited = Vec::new();
            let result = stratum.greedy_lfp(&specs, config, &mut |t| visited.push(t.clone()))?;
            for t in &visited {
                let x = rho(&specs, t)?;
                report.universe.extend(x.iter().cloned());
                if test(&stratum, x, &mut report)? {
                    return Ok(report);
                }
            }
            match result {
                FixpointResult::Converged { value, .. } => answers.extend(rho(&specs, &value)?),
                FixpointResult::FuelExhausted { .. } => {
                    report.universe_complete = false;
                    break;
                }
            }
        }
        return Ok(report);
    }

    for s in stratum_universes(program, config)? {
        report.universe.extend(s.atoms.iter().cloned());
        report.universe_complete &= s.complete;
        let atoms: Vec<Atom> = s.atoms.into_iter().collect();
        match strategy {
            Strategy::Exhaustive { max_atoms } => {
                if !s.complete {
                    report.verdict = Verdict::Inconclusive(format!(
                        "least model of stratum {} did not converge within budget",
                        s.program.index
                    ));
                    return Ok(report);
                }
                if atoms.len() > max_atoms {
                    report.verdict = Verdict::Inconclusive(format!(
                        "stratum {} has {} atoms, more than the limit of {max_atoms}",
                        s.program.index,
                        atoms.len()
                    ));
                    return Ok(report);
                }
                for size in 0..=atoms.len() {
                    let mut found = false;
                    for_each_combination(atoms.len(), size, &mut |picked| {
                        let x = picked.iter().map(|&i| atoms[i].clone()).collect();
                        found = test(&s.program, x, &mut report)?;
                        Ok(!found)
                    })?;
                    if found {
                        return Ok(report);
                    }
                }
            }
            Strategy::Sampled { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let largest = atoms.len().min(MAX_SAMPLE_SIZE);
                for _ in 0..samples {
                    let size = rng.random_range(0..=largest);
                    let mut picked = sample(&mut rng, atoms.len(), size).into_vec();
                    picked.sort_unstable();
                    let x = picked.iter().map(|&i| atoms[i].clone()).collect();
                    if test(&s.program, x, &mut report)? {
                        return Ok(report);
                    }
                }
            }
            Strategy::Trace => unreachable!("handled above"),
        }
    }
    Ok(report)
}

/// Calls `f` on every `k`-element subset of `0..n` as a sorted index list,
/// in lexicographic order, until it returns false.
fn for_each_combination(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> Result<bool>) -> Result<()> {
    let mut picked: Vec<usize> = (0..k).collect();
    loop {
        if !f(&picked)? {
            return Ok(());
        }
        let Some(i) = (0..k).rev().find(|&i| picked[i] < n - k + i) else {
            return Ok(());
        };
        picked[i] += 1;
        for j in i + 1..k {
            picked[j] = picked[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyDiff {
    pub key: Key,
    pub reference: LatticeValue,
    pub greedy: LatticeValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub reference: Outcome,
    pub greedy: Outcome,
    pub equal: bool,
    /// Keys whose final values differ; only filled when both engines
    /// converged.
    pub differences: Vec<KeyDiff>,
}

pub fn diff_semantics(program: &Program, config: &EvalConfig) -> Result<DiffReport> {
    let reference = stratified_reference_semantics(program, config)?;
    let greedy = stratified_greedy_semantics(program, config)?;
    let mut differences = Vec::new();
    if let (Some(r), Some(g)) = (reference.model(), greedy.model()) {
        let keys: std::collections::BTreeSet<&Key> = r.table.keys().chain(g.table.keys()).collect();
        for key in keys {
            let (rv, gv) = (r.table.get(key), g.table.get(key));
            if rv != gv {
                differences.push(KeyDiff {
                    key: key.clone(),
                    reference: rv.clone(),
                    greedy: gv.clone(),
                });
            }
        }
    }
    let equal = reference.model().is_some() && greedy.model().is_some() && differences.is_empty();
    Ok(DiffReport {
        reference,
        greedy,
        equal,
        differences,
    })
}

pub fn show_set(x: &Interpretation) -> String {
    let items: Vec<String> = x.iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::term::Term;

    const UNSOUND: &str = ":- table p(max).\np(0). p(1).\np(2) :- p(X), X = 1.\np(3) :- p(X), X = 0.\n";

    fn p(n: i64) -> Atom {
        Atom::new("p", vec![Term::Int(n)])
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, &mut |c| {
            seen.push(c.to_vec());
            Ok(true)
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        let mut empty = 0;
        for_each_combination(3, 0, &mut |c| {
            assert!(c.is_empty());
            empty += 1;
            Ok(true)
        })
        .unwrap();
        assert_eq!(empty, 1);
    }

    #[test]
    fn unsound_universe_and_witness() {
        let program = parse_program(UNSOUND).unwrap();
        let config = EvalConfig::default();
        assert_eq!(
            atom_universe(&program, &config, 16).unwrap(),
            Universe::Complete(Interpretation::from([p(0), p(1), p(2), p(3)]))
        );
        let report = check_correctness(&program, Strategy::Exhaustive { max_atoms: 16 }, &config).unwrap();
        let Verdict::Violation(v) = &report.verdict else {
            panic!("expected a violation, got {:?}", report.verdict);
        };
        assert_eq!(v.witness, Interpretation::from([p(0), p(1)]));
        let specs = Specs::from_program(&program);
        assert_eq!(v.lhs, embed(&specs, [&p(3)]).unwrap());
        assert_eq!(v.rhs, embed(&specs, [&p(2)]).unwrap());
        assert!(reverify(&program, v, &config).unwrap());
        let fusion = check_fusion_condition(&program, Strategy::Exhaustive { max_atoms: 16 }, &config).unwrap();
        assert_eq!(fusion.verdict, report.verdict);
    }

    #[test]
    fn empty_program_has_nothing_to_violate() {
        let program = parse_program("").unwrap();
        let r = check_fusion_condition(&program, Strategy::Exhaustive { max_atoms: 16 }, &EvalConfig::default())
            .unwrap();
        assert_eq!(r.verdict, Verdict::NoViolationFound);
        assert!(diff_semantics(&program, &EvalConfig::default()).unwrap().equal);
    }

    #[test]
    fn trace_finds_the_unsound_step() {
        let program = parse_program(UNSOUND).unwrap();
        let r = check_correctness(&program, Strategy::Trace, &EvalConfig::default()).unwrap();
        // The greedy run only ever holds one p atom, and each single atom
        // passes; the trace is a necessary condition only.
        assert_eq!(r.verdict, Verdict::NoViolationFound);
        assert_eq!(r.subsets_checked, 3);
    }

    #[test]
    fn too_large_universe_is_inconclusive() {
        let program = parse_program(UNSOUND).unwrap();
        let r = check_correctness(&program, Strategy::Exhaustive { max_atoms: 3 }, &EvalConfig::default()).unwrap();
        assert!(matches!(r.verdict, Verdict::Inconclusive(_)));
    }

    #[test]
    fn diff_of_unsound_program() {
        let program = parse_program(UNSOUND).unwrap();
        let d = diff_semantics(&program, &EvalConfig::default()).unwrap();
        assert!(!d.equal);
        assert_eq!(d.differences.len(), 1);
        assert_eq!(d.differences[0].reference, LatticeValue::Term(Term::Int(3)));
        assert_eq!(d.differences[0].greedy, LatticeValue::Term(Term::Int(2)));
    }

    #[test]
    fn sampled_is_deterministic() {
        let program = parse_program(UNSOUND).unwrap();
        let s = Strategy::Sampled { samples: 50, seed: 7 };
        let a = check_correctness(&program, s, &EvalConfig::default()).unwrap();
        let b = check_correctness(&program, s, &EvalConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
