//! Bottom-up rule application.
//!
//! Clauses are compiled to slot-indexed patterns and evaluated by joining
//! body literals left to right against an indexed fact set. With a delta set,
//! only derivations that use at least one delta atom are produced.

use std::collections::{BTreeSet, HashMap};

use crate::builtin;
use crate::error::Result;
use crate::program::{BuiltinOp, Clause, Literal, Pattern};
use crate::term::{Atom, Name, Term};

/// A finite Herbrand interpretation, iterated in atom order.
pub type Interpretation = BTreeSet<Atom>;

/// Pattern with variables replaced by slot numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Slot {
    Var(usize),
    Int(i64),
    Symbol(Name),
    Compound(Name, Vec<Slot>),
    List(Vec<Slot>),
}

#[derive(Debug, Default)]
pub(crate) struct VarMap {
    names: Vec<Name>,
}

impl VarMap {
    pub(crate) fn slot(&mut self, name: &Name) -> usize {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.clone());
                self.names.len() - 1
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.names.len()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.names.iter().enumerate().map(|(i, n)| (n, i))
    }

    pub(crate) fn compile(&mut self, p: &Pattern) -> Slot {
        match p {
            Pattern::Var(v) => Slot::Var(self.slot(v)),
            Pattern::Int(i) => Slot::Int(*i),
            Pattern::Symbol(s) => Slot::Symbol(s.clone()),
            Pattern::Compound(f, args) => Slot::Compound(f.clone(), args.iter().map(|a| self.compile(a)).collect()),
            Pattern::List(items) => Slot::List(items.iter().map(|a| self.compile(a)).collect()),
        }
    }
}

/// Variable bindings with an undo trail.
#[derive(Debug, Clone)]
pub(crate) struct Env {
    values: Vec<Option<Term>>,
    trail: Vec<usize>,
}

impl Env {
    pub(crate) fn new(slots: usize) -> Env {
        Env {
            values: vec![None; slots],
            trail: Vec::new(),
        }
    }

    pub(crate) fn get(&self, slot: usize) -> Option<&Term> {
        self.values[slot].as_ref()
    }

    pub(crate) fn bind(&mut self, slot: usize, value: Term) {
        debug_assert!(self.values[slot].is_none());
        self.values[slot] = Some(value);
        self.trail.push(slot);
    }

    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let slot = self.trail.pop().expect("trail non-empty");
            self.values[slot] = None;
        }
    }

    pub(crate) fn instantiate(&self, p: &Slot) -> Option<Term> {
        Some(match p {
            Slot::Var(v) => self.values[*v].clone()?,
            Slot::Int(i) => Term::Int(*i),
            Slot::Symbol(s) => Term::Symbol(s.clone()),
            Slot::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.instantiate(a)).collect::<Option<_>>()?)
            }
            Slot::List(items) => Term::List(items.iter().map(|a| self.instantiate(a)).collect::<Option<_>>()?),
        })
    }

    /// Matches `p` against a ground term, binding free slots. On failure some
    /// slots may stay bound; callers undo to a mark.
    pub(crate) fn unify(&mut self, p: &Slot, t: &Term) -> bool {
        match (p, t) {
            (Slot::Var(v), _) => match &self.values[*v] {
                Some(bound) => bound == t,
                None => {
                    self.bind(*v, t.clone());
                    true
                }
            },
            (Slot::Int(a), Term::Int(b)) => a == b,
            (Slot::Symbol(a), Term::Symbol(b)) => a == b,
            (Slot::Compound(f, ps), Term::Compound(g, ts)) => {
                f == g && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| self.unify(p, t))
            }
            (Slot::List(ps), Term::List(ts)) => {
                ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| self.unify(p, t))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
enum Step {
    Call { pred: Name, args: Vec<Slot> },
    Builtin { op: BuiltinOp, lhs: Slot, rhs: Slot },
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledClause {
    head_pred: Name,
    head: Vec<Slot>,
    body: Vec<Step>,
    slots: usize,
}

impl CompiledClause {
    pub(crate) fn new(clause: &Clause) -> CompiledClause {
        let mut vars = VarMap::default();
        let body = clause
            .body
            .iter()
            .map(|lit| match lit {
                Literal::Call(call) => Step::Call {
                    pred: call.pred.clone(),
                    args: call.args.iter().map(|a| vars.compile(a)).collect(),
                },
                Literal::Builtin { op, lhs, rhs } => Step::Builtin {
                    op: *op,
                    lhs: vars.compile(lhs),
                    rhs: vars.compile(rhs),
                },
            })
            .collect();
        let head = clause.head.args.iter().map(|a| vars.compile(a)).collect();
        CompiledClause {
            head_pred: clause.head.pred.clone(),
            head,
            body,
            slots: vars.len(),
        }
    }

    fn calls(&self) -> usize {
        self.body.iter().filter(|s| matches!(s, Step::Call { .. })).count()
    }
}

#[derive(Debug, Default)]
struct Relation {
    tuples: Vec<Vec<Term>>,
    by_first: HashMap<Term, Vec<usize>>,
}

/// Atoms grouped by predicate, indexed on the first argument.
#[derive(Debug, Default)]
pub(crate) struct FactIndex {
    relations: HashMap<Name, Relation>,
}

impl FactIndex {
    pub(crate) fn new<'a, I: IntoIterator<Item = &'a Atom>>(atoms: I) -> FactIndex {
        let mut index = FactIndex::default();
        for atom in atoms {
            index.insert(atom);
        }
        index
    }

    pub(crate) fn insert(&mut self, atom: &Atom) {
        let rel = self.relations.entry(atom.pred.clone()).or_default();
        let id = rel.tuples.len();
        if let Some(first) = atom.args.first() {
            rel.by_first.entry(first.clone()).or_default().push(id);
        }
        rel.tuples.push(atom.args.clone());
    }

    fn candidates<'a>(&'a self, pred: &Name, first: Option<&Term>) -> Box<dyn Iterator<Item = &'a [Term]> + 'a> {
        let Some(rel) = self.relations.get(pred) else {
            return Box::new(std::iter::empty());
        };
        match first {
            Some(key) => match rel.by_first.get(key) {
                Some(ids) => Box::new(ids.iter().map(move |&i| rel.tuples[i].as_slice())),
                None => Box::new(std::iter::empty()),
            },
            None => Box::new(rel.tuples.iter().map(Vec::as_slice)),
        }
    }
}

/// Applies `clauses` once. Without `delta` this is one full immediate
/// consequence step over `full` (facts included); with `delta`, only
/// derivations using at least one atom from `delta` for some call are
/// produced, the remaining calls reading `full`. Stops early, returning
/// false, as soon as `emit` returns false.
pub(crate) fn derive(
    clauses: &[CompiledClause],
    full: &FactIndex,
    delta: Option<&FactIndex>,
    emit: &mut dyn FnMut(Atom) -> bool,
) -> Result<bool> {
    for clause in clauses {
        let calls = clause.calls();
        match delta {
            None => {
                let mut env = Env::new(clause.slots);
                if !join(clause, 0, 0, None, full, full, &mut env, emit)? {
                    return Ok(false);
                }
            }
            Some(delta) => {
                for pick in 0..calls {
                    let mut env = Env::new(clause.slots);
                    if !join(clause, 0, 0, Some(pick), full, delta, &mut env, emit)? {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn join(
    clause: &CompiledClause,
    at: usize,
    call_no: usize,
    pick: Option<usize>,
    full: &FactIndex,
    delta: &FactIndex,
    env: &mut Env,
    emit: &mut dyn FnMut(Atom) -> bool,
) -> Result<bool> {
    let Some(step) = clause.body.get(at) else {
        let args = clause
            .head
            .iter()
            .map(|s| env.instantiate(s))
            .collect::<Option<Vec<_>>>()
            .expect("range restriction guarantees a ground head");
        return Ok(emit(Atom {
            pred: clause.head_pred.clone(),
            args,
        }));
    };
    let mark = env.mark();
    match step {
        Step::Builtin { op, lhs, rhs } => {
            let go = !builtin::run(*op, lhs, rhs, env)? || join(clause, at + 1, call_no, pick, full, delta, env, emit)?;
            env.undo(mark);
            if !go {
                return Ok(false);
            }
        }
        Step::Call { pred, args } => {
            let source = if pick == Some(call_no) { delta } else { full };
            let first = args.first().and_then(|a| env.instantiate(a));
            for tuple in source.candidates(pred, first.as_ref()) {
                let go = !(tuple.len() == args.len() && args.iter().zip(tuple).all(|(p, t)| env.unify(p, t)))
                    || join(clause, at + 1, call_no + 1, pick, full, delta, env, emit)?;
                env.undo(mark);
                if !go {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A set of clauses evaluated together, plus ground facts injected from
/// outside (the aggregated answers of lower strata).
#[derive(Debug, Clone)]
pub(crate) struct Unit {
    clauses: Vec<CompiledClause>,
    base: Vec<Atom>,
}

impl Unit {
    pub(crate) fn new<'a, I: IntoIterator<Item = &'a Clause>>(clauses: I, base: Vec<Atom>) -> Unit {
        Unit {
            clauses: clauses.into_iter().map(CompiledClause::new).collect(),
            base,
        }
    }

    /// One immediate consequence step.
    pub(crate) fn tp(&self, i: &Interpretation) -> Result<Interpretation> {
        let index = FactIndex::new(i);
        let mut out: Interpretation = self.base.iter().cloned().collect();
        derive(&self.clauses, &index, None, &mut |a| {
            out.insert(a);
            true
        })?;
        Ok(out)
    }

    /// Like `tp`, but gives up with `None` once more than `budget`
    /// derivations have been made.
    pub(crate) fn tp_bounded(&self, i: &FactIndex, budget: usize) -> Result<Option<Interpretation>> {
        let mut out: Interpretation = self.base.iter().cloned().collect();
        let mut made = 0usize;
        let finished = derive(&self.clauses, i, None, &mut |a| {
            out.insert(a);
            made += 1;
            made <= budget
        })?;
        Ok(finished.then_some(out))
    }

    /// Atoms derivable using at least one atom of `delta`, or `None` once
    /// more than `budget` derivations have been made.
    pub(crate) fn tp_delta(&self, full: &FactIndex, delta: &FactIndex, budget: usize) -> Result<Option<Interpretation>> {
        let mut out = Interpretation::new();
        let mut made = 0usize;
        let finished = derive(&self.clauses, full, Some(delta), &mut |a| {
            out.insert(a);
            made += 1;
            made <= budget
        })?;
        Ok(finished.then_some(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn atoms(src: &[&str]) -> Interpretation {
        src.iter()
            .map(|s| {
                let p = parse_program(&format!("{s}.")).unwrap();
                let head = &p.clauses[0].head;
                Atom {
                    pred: head.pred.clone(),
                    args: head.args.iter().map(|a| a.to_term().unwrap()).collect(),
                }
            })
            .collect()
    }

    #[test]
    fn delta_restricts_to_new_derivations() {
        let program = parse_program("t(X,Y) :- e(X,Y). t(X,Z) :- t(X,Y), e(Y,Z).").unwrap();
        let unit = Unit::new(&program.clauses, vec![]);
        let full = atoms(&["e(a,b)", "e(b,c)", "t(a,b)"]);
        let delta = atoms(&["t(a,b)"]);
        let derived = unit.tp_delta(&FactIndex::new(&full), &FactIndex::new(&delta), usize::MAX).unwrap();
        assert_eq!(derived, Some(atoms(&["t(a,c)"])));
        assert_eq!(unit.tp_delta(&FactIndex::new(&full), &FactIndex::new(&full), 1).unwrap(), None);
        let all = unit.tp(&full).unwrap();
        assert_eq!(all, atoms(&["t(a,b)", "t(a,c)", "t(b,c)"]));
    }

    #[test]
    fn repeated_variables_must_agree() {
        let program = parse_program("loop(X) :- e(X,X).").unwrap();
        let unit = Unit::new(&program.clauses, vec![]);
        let out = unit.tp(&atoms(&["e(a,a)", "e(a,b)"])).unwrap();
        assert_eq!(out, atoms(&["loop(a)"]));
    }
}
