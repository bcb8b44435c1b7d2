//! Clauses, tabling directives and the assembled [`Program`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::builtin::invertible_unknown;
use crate::error::{Error, Result};
use crate::lattice::{JoinTable, PartialOrder};
use crate::term::{write_args, write_name, Name, Term};

/// A term that may contain variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(Name),
    Int(i64),
    Symbol(Name),
    Compound(Name, Vec<Pattern>),
    List(Vec<Pattern>),
}

impl Pattern {
    pub fn var(name: &str) -> Pattern {
        Pattern::Var(Arc::from(name))
    }

    pub fn symbol(name: &str) -> Pattern {
        Pattern::Symbol(Arc::from(name))
    }

    pub fn compound(functor: &str, args: Vec<Pattern>) -> Pattern {
        Pattern::Compound(Arc::from(functor), args)
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Pattern::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Pattern::Int(_) | Pattern::Symbol(_) => {}
            Pattern::Compound(_, args) | Pattern::List(args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    /// The ground term this pattern denotes, if it has no variables.
    pub fn to_term(&self) -> Option<Term> {
        Some(match self {
            Pattern::Var(_) => return None,
            Pattern::Int(i) => Term::Int(*i),
            Pattern::Symbol(s) => Term::Symbol(s.clone()),
            Pattern::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(Pattern::to_term).collect::<Option<_>>()?,
            ),
            Pattern::List(items) => {
                Term::List(items.iter().map(Pattern::to_term).collect::<Option<_>>()?)
            }
        })
    }

    fn infix(&self) -> Option<(&str, &Pattern, &Pattern)> {
        match self {
            Pattern::Compound(f, args) if args.len() == 2 && matches!(&**f, "+" | "-" | "*") => {
                Some((f, &args[0], &args[1]))
            }
            _ => None,
        }
    }
}

impl From<&Term> for Pattern {
    fn from(t: &Term) -> Self {
        match t {
            Term::Int(i) => Pattern::Int(*i),
            Term::Symbol(s) => Pattern::Symbol(s.clone()),
            Term::Compound(f, args) => Pattern::Compound(f.clone(), args.iter().map(Pattern::from).collect()),
            Term::List(items) => Pattern::List(items.iter().map(Pattern::from).collect()),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((op, lhs, rhs)) = self.infix() {
            let side = |f: &mut fmt::Formatter<'_>, p: &Pattern| {
                if p.infix().is_some() {
                    write!(f, "({p})")
                } else {
                    write!(f, "{p}")
                }
            };
            side(f, lhs)?;
            write!(f, " {op} ")?;
            return side(f, rhs);
        }
        match self {
            Pattern::Var(v) => f.write_str(v),
            Pattern::Int(i) => write!(f, "{i}"),
            Pattern::Symbol(s) => write_name(f, s),
            Pattern::Compound(functor, args) if &**functor == "-" && args.len() == 1 => {
                match &args[0] {
                    inner @ (Pattern::Var(_) | Pattern::Symbol(_)) => write!(f, "-{inner}"),
                    inner => write!(f, "-({inner})"),
                }
            }
            Pattern::Compound(functor, args) => {
                write_name(f, functor)?;
                f.write_str("(")?;
                write_args(f, args)?;
                f.write_str(")")
            }
            Pattern::List(items) => {
                f.write_str("[")?;
                write_args(f, items)?;
                f.write_str("]")
            }
        }
    }
}

/// `pred(args...)` with possibly non-ground arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CallPattern {
    pub pred: Name,
    pub args: Vec<Pattern>,
}

impl fmt::Display for CallPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_name(f, &self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_args(f, &self.args)?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinOp {
    Is,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BuiltinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BuiltinOp::Is => "is",
            BuiltinOp::Eq => "=",
            BuiltinOp::Lt => "<",
            BuiltinOp::Le => "=<",
            BuiltinOp::Gt => ">",
            BuiltinOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Call(CallPattern),
    Builtin {
        op: BuiltinOp,
        lhs: Pattern,
        rhs: Pattern,
    },
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Call(call) => write!(f, "{call}"),
            Literal::Builtin { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    pub head: CallPattern,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// Checks that every variable is bound before it is needed.
    ///
    /// Call literals bind all their variables. `is` binds its left side once
    /// the right side is known, or the single unknown of an invertible right
    /// side (`+`, `-`, `*`) once the left side is known. `=` binds one side
    /// once the other is known. Comparisons bind nothing.
    pub fn check_range_restricted(&self) -> Result<()> {
        let mut bound: BTreeSet<Name> = BTreeSet::new();
        let fail = |var: &Name| Error::RangeRestriction {
            clause: self.to_string(),
            var: var.to_string(),
        };
        let first_unbound = |p: &Pattern, bound: &BTreeSet<Name>| p.vars().into_iter().find(|v| !bound.contains(v));
        for lit in &self.body {
            match lit {
                Literal::Call(call) => {
                    for a in &call.args {
                        bound.extend(a.vars());
                    }
                }
                Literal::Builtin { op: BuiltinOp::Is, lhs, rhs } => {
                    if first_unbound(rhs, &bound).is_none() {
                        bound.extend(lhs.vars());
                    } else if let Some(v) = first_unbound(lhs, &bound) {
                        return Err(fail(&v));
                    } else if let Some(v) = invertible_unknown(rhs, &|v| bound.contains(v)) {
                        bound.insert(v);
                    } else {
                        return Err(fail(&first_unbound(rhs, &bound).expect("unbound var exists")));
                    }
                }
                Literal::Builtin { op: BuiltinOp::Eq, lhs, rhs } => {
                    match (first_unbound(lhs, &bound), first_unbound(rhs, &bound)) {
                        (None, _) => bound.extend(rhs.vars()),
                        (_, None) => bound.extend(lhs.vars()),
                        (Some(v), Some(_)) => return Err(fail(&v)),
                    }
                }
                Literal::Builtin { lhs, rhs, .. } => {
                    if let Some(v) = first_unbound(lhs, &bound).or_else(|| first_unbound(rhs, &bound)) {
                        return Err(fail(&v));
                    }
                }
            }
        }
        for a in &self.head.args {
            if let Some(v) = first_unbound(a, &bound) {
                return Err(fail(&v));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, lit) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{lit}")?;
            }
        }
        f.write_str(".")
    }
}

/// Tabling mode of one argument position. `nt`, `+` and `_` all read as `Index`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Mode {
    Index,
    Min,
    Max,
    All,
    Lattice(Name),
    Po(Name),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Index => f.write_str("index"),
            Mode::Min => f.write_str("min"),
            Mode::Max => f.write_str("max"),
            Mode::All => f.write_str("all"),
            Mode::Lattice(name) => {
                f.write_str("lattice(")?;
                write_name(f, name)?;
                f.write_str("/3)")
            }
            Mode::Po(name) => {
                f.write_str("po(")?;
                write_name(f, name)?;
                f.write_str("/2)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ModeVector {
    pub modes: Vec<Mode>,
}

impl ModeVector {
    pub fn arity(&self) -> usize {
        self.modes.len()
    }

    pub fn is_all_index(&self) -> bool {
        self.modes.iter().all(|m| *m == Mode::Index)
    }
}

/// Where a `lattice(Name/3)` join comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinRelation {
    Table(Arc<JoinTable>),
    /// Arithmetic `min`, e.g. `min(X,Y,Z) :- Z is min(X,Y).`
    Min,
    /// Arithmetic `max`.
    Max,
    /// `max` over the naturals extended with `infty` (name `max_infty`).
    ExtendedNatMax,
}

impl JoinRelation {
    pub(crate) fn builtin(name: &str) -> Option<JoinRelation> {
        match name {
            "min" => Some(JoinRelation::Min),
            "max" => Some(JoinRelation::Max),
            "max_infty" => Some(JoinRelation::ExtendedNatMax),
            _ => None,
        }
    }
}

/// A parsed and validated program.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    /// Clauses taking part in evaluation.
    pub clauses: Vec<Clause>,
    pub directives: BTreeMap<Name, ModeVector>,
    pub join_relations: BTreeMap<Name, JoinRelation>,
    pub order_relations: BTreeMap<Name, Arc<PartialOrder>>,
    /// Clauses defining join and order relations. They describe lattices and
    /// are not evaluated.
    pub relation_clauses: Vec<Clause>,
}

impl Program {
    /// Every predicate name mentioned by a clause head, a body call or a directive.
    pub fn predicates(&self) -> BTreeSet<Name> {
        let mut preds: BTreeSet<Name> = self.directives.keys().cloned().collect();
        for clause in &self.clauses {
            preds.insert(clause.head.pred.clone());
            for lit in &clause.body {
                if let Literal::Call(call) = lit {
                    preds.insert(call.pred.clone());
                }
            }
        }
        preds
    }

    /// Arity of each predicate, as used by clauses and directives.
    pub fn arities(&self) -> BTreeMap<Name, usize> {
        let mut out: BTreeMap<Name, usize> = self
            .directives
            .iter()
            .map(|(p, m)| (p.clone(), m.arity()))
            .collect();
        for clause in &self.clauses {
            out.entry(clause.head.pred.clone()).or_insert(clause.head.args.len());
            for lit in &clause.body {
                if let Literal::Call(call) = lit {
                    out.entry(call.pred.clone()).or_insert(call.args.len());
                }
            }
        }
        out
    }

    /// Assembles a program from parsed parts, resolving the relations named by
    /// `lattice/3` and `po/2` modes and validating arities and range restriction.
    pub fn assemble(all_clauses: Vec<Clause>, directives: BTreeMap<Name, ModeVector>) -> Result<Program> {
        let mut join_names = BTreeSet::new();
        let mut order_names = BTreeSet::new();
        for modes in directives.values() {
            for m in &modes.modes {
                match m {
                    Mode::Lattice(n) => {
                        join_names.insert(n.clone());
                    }
                    Mode::Po(n) => {
                        order_names.insert(n.clone());
                    }
                    _ => {}
                }
            }
        }
        if let Some(both) = join_names.intersection(&order_names).next() {
            return Err(semantic(format!("{both} is used both as a join and as an order relation")));
        }

        let (relation_clauses, clauses): (Vec<Clause>, Vec<Clause>) = all_clauses
            .into_iter()
            .partition(|c| join_names.contains(&c.head.pred) || order_names.contains(&c.head.pred));

        for clause in &clauses {
            for lit in &clause.body {
                if let Literal::Call(call) = lit {
                    if join_names.contains(&call.pred) || order_names.contains(&call.pred) {
                        return Err(semantic(format!(
                            "relation {} describes a lattice and cannot be called in `{clause}`",
                            call.pred
                        )));
                    }
                }
            }
        }
        for pred in directives.keys() {
            if join_names.contains(pred) || order_names.contains(pred) {
                return Err(semantic(format!("relation {pred} describes a lattice and cannot be tabled")));
            }
        }

        let mut join_relations = BTreeMap::new();
        for name in &join_names {
            let defs: Vec<&Clause> = relation_clauses.iter().filter(|c| &c.head.pred == name).collect();
            join_relations.insert(name.clone(), resolve_join(name, &defs)?);
        }
        let mut order_relations = BTreeMap::new();
        for name in &order_names {
            let defs: Vec<&Clause> = relation_clauses.iter().filter(|c| &c.head.pred == name).collect();
            let pairs = relation_facts(name, 2, &defs)?
                .into_iter()
                .map(|mut t| {
                    let y = t.pop().expect("arity 2");
                    let x = t.pop().expect("arity 2");
                    (x, y)
                });
            order_relations.insert(name.clone(), Arc::new(PartialOrder::from_pairs(name, pairs)?));
        }

        let program = Program {
            clauses,
            directives,
            join_relations,
            order_relations,
            relation_clauses,
        };
        program.check_arities()?;
        for clause in &program.clauses {
            clause.check_range_restricted()?;
        }
        Ok(program)
    }

    fn check_arities(&self) -> Result<()> {
        let expected = self.arities();
        let check = |pred: &Name, found: usize| {
            let want = expected[pred];
            if want != found {
                Err(Error::Arity {
                    pred: pred.to_string(),
                    expected: want,
                    found,
                })
            } else {
                Ok(())
            }
        };
        for clause in &self.clauses {
            check(&clause.head.pred, clause.head.args.len())?;
            for lit in &clause.body {
                if let Literal::Call(call) = lit {
                    check(&call.pred, call.args.len())?;
                }
            }
        }
        Ok(())
    }
}

fn semantic(message: String) -> Error {
    Error::Parse {
        line: 0,
        col: 0,
        message,
    }
}

fn resolve_join(name: &Name, defs: &[&Clause]) -> Result<JoinRelation> {
    let only_facts = defs.iter().all(|c| c.is_fact());
    if !defs.is_empty() && only_facts {
        let triples = relation_facts(name, 3, defs)?.into_iter().map(|mut t| {
            let z = t.pop().expect("arity 3");
            let y = t.pop().expect("arity 3");
            let x = t.pop().expect("arity 3");
            (x, y, z)
        });
        return Ok(JoinRelation::Table(Arc::new(JoinTable::from_triples(name, triples)?)));
    }
    for c in defs {
        if c.head.args.len() != 3 {
            return Err(Error::Arity {
                pred: name.to_string(),
                expected: 3,
                found: c.head.args.len(),
            });
        }
    }
    JoinRelation::builtin(name).ok_or_else(|| {
        if defs.is_empty() {
            semantic(format!("join relation {name}/3 has no definition"))
        } else {
            semantic(format!(
                "join relation {name}/3 must be given by facts (only min, max and max_infty may be defined by rules)"
            ))
        }
    })
}

// Ground facts of a relation. A non-ground fact is accepted only when it
// repeats a single variable in every position (`lub(X,X,X)`, `le(X,X)`), which
// restates idempotence or reflexivity.
fn relation_facts(name: &Name, arity: usize, defs: &[&Clause]) -> Result<Vec<Vec<Term>>> {
    let mut out = Vec::new();
    for c in defs {
        if c.head.args.len() != arity {
            return Err(Error::Arity {
                pred: name.to_string(),
                expected: arity,
                found: c.head.args.len(),
            });
        }
        if !c.is_fact() {
            return Err(semantic(format!("relation {name}/{arity} must be given by facts: `{c}`")));
        }
        match c.head.args.iter().map(Pattern::to_term).collect::<Option<Vec<_>>>() {
            Some(terms) => out.push(terms),
            None => {
                let first = &c.head.args[0];
                let schema = matches!(first, Pattern::Var(_)) && c.head.args.iter().all(|a| a == first);
                if !schema {
                    return Err(Error::RangeRestriction {
                        clause: c.to_string(),
                        var: c.head.args.iter().flat_map(Pattern::vars).next().expect("non-ground").to_string(),
                    });
                }
            }
        }
    }
    Ok(out)
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pred, modes) in &self.directives {
            f.write_str(":- table ")?;
            write_name(f, pred)?;
            if modes.modes.is_empty() {
                f.write_str("/0")?;
            } else {
                f.write_str("(")?;
                write_args(f, &modes.modes)?;
                f.write_str(")")?;
            }
            f.write_str(".\n")?;
        }
        for clause in self.relation_clauses.iter().chain(&self.clauses) {
            writeln!(f, "{clause}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(pred: &str, args: Vec<Pattern>) -> CallPattern {
        CallPattern {
            pred: Arc::from(pred),
            args,
        }
    }

    #[test]
    fn range_restriction_accepts_inverted_is() {
        // even(X) :- odd(Y), Y is X - 1.
        let clause = Clause {
            head: call("even", vec![Pattern::var("X")]),
            body: vec![
                Literal::Call(call("odd", vec![Pattern::var("Y")])),
                Literal::Builtin {
                    op: BuiltinOp::Is,
                    lhs: Pattern::var("Y"),
                    rhs: Pattern::compound("-", vec![Pattern::var("X"), Pattern::Int(1)]),
                },
            ],
        };
        clause.check_range_restricted().unwrap();
    }

    #[test]
    fn range_restriction_rejects_free_head_var() {
        let clause = Clause {
            head: call("p", vec![Pattern::var("X")]),
            body: vec![Literal::Call(call("q", vec![Pattern::var("Y")]))],
        };
        let err = clause.check_range_restricted().unwrap_err();
        assert!(matches!(err, Error::RangeRestriction { ref var, .. } if var == "X"));
    }

    #[test]
    fn range_restriction_rejects_min_with_unknowns() {
        // min(X,Y,Z) :- Z is min(X,Y).
        let clause = Clause {
            head: call("m", vec![Pattern::var("X"), Pattern::var("Y"), Pattern::var("Z")]),
            body: vec![Literal::Builtin {
                op: BuiltinOp::Is,
                lhs: Pattern::var("Z"),
                rhs: Pattern::compound("min", vec![Pattern::var("X"), Pattern::var("Y")]),
            }],
        };
        assert!(clause.check_range_restricted().is_err());
    }

    #[test]
    fn expressions_print_with_parentheses() {
        let e = Pattern::compound(
            "*",
            vec![
                Pattern::compound("+", vec![Pattern::var("A"), Pattern::Int(1)]),
                Pattern::compound("-", vec![Pattern::var("B")]),
            ],
        );
        assert_eq!(e.to_string(), "(A + 1) * -B");
    }
}
