//! Answer tables: finite maps from (predicate, index arguments) to a lattice
//! value, with absent keys standing for bottom.

use std::borrow::Cow;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::eval::Interpretation;
use crate::lattice::{abstract_output, join_values, leq_values, represent_output, LatticeSpec, LatticeValue};
use crate::program::{JoinRelation, Mode, Program};
use crate::term::{write_args, write_name, Atom, Name, Term};

/// How the arguments of one predicate split into index and output positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredSpec {
    pub name: Name,
    pub arity: usize,
    pub index_positions: Vec<usize>,
    pub output_positions: Vec<usize>,
    /// The output lattice; a product when there are zero or several outputs.
    pub lattice: LatticeSpec,
}

impl PredSpec {
    /// All arguments index, one-point output lattice.
    pub fn discrete(name: Name, arity: usize) -> PredSpec {
        PredSpec {
            name,
            arity,
            index_positions: (0..arity).collect(),
            output_positions: Vec::new(),
            lattice: LatticeSpec::discrete(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.output_positions.is_empty()
    }

    /// Splits an atom into its table key and abstracted output value.
    pub fn split(&self, atom: &Atom) -> Result<(Key, LatticeValue)> {
        if atom.args.len() != self.arity {
            return Err(Error::Arity {
                pred: self.name.to_string(),
                expected: self.arity,
                found: atom.args.len(),
            });
        }
        let inputs = self.index_positions.iter().map(|&i| atom.args[i].clone()).collect();
        let key = Key {
            pred: self.name.clone(),
            inputs,
        };
        let value = match (self.output_positions.as_slice(), &self.lattice) {
            ([single], spec) => abstract_output(spec, &self.name, &atom.args[*single])?,
            (outputs, LatticeSpec::Product(specs)) => LatticeValue::Product(
                outputs
                    .iter()
                    .zip(specs)
                    .map(|(&i, spec)| abstract_output(spec, &self.name, &atom.args[i]))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => return Err(Error::Internal(format!("malformed spec for {}", self.name))),
        };
        Ok((key, value))
    }

    /// The atom representing `value` under `inputs`.
    pub fn atom(&self, inputs: &[Term], value: &LatticeValue) -> Result<Atom> {
        let outputs: Vec<Term> = match (self.output_positions.len(), &self.lattice, value) {
            (1, spec, v) => vec![represent_output(spec, v)?],
            (_, LatticeSpec::Product(specs), LatticeValue::Product(parts)) if parts.len() == specs.len() => specs
                .iter()
                .zip(parts)
                .map(|(s, p)| represent_output(s, p))
                .collect::<Result<_>>()?,
            _ => return Err(Error::Internal(format!("value {value} does not fit {}", self.name))),
        };
        let mut args = vec![Term::Int(0); self.arity];
        for (&i, t) in self.index_positions.iter().zip(inputs) {
            args[i] = t.clone();
        }
        for (&i, t) in self.output_positions.iter().zip(outputs) {
            args[i] = t;
        }
        Ok(Atom {
            pred: self.name.clone(),
            args,
        })
    }
}

/// Per-predicate lattice specs for a program. Predicates without a directive
/// are discrete.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Specs {
    preds: BTreeMap<Name, PredSpec>,
}

impl Specs {
    pub fn from_program(program: &Program) -> Specs {
        let mut preds = BTreeMap::new();
        for (name, arity) in program.arities() {
            let spec = match program.directives.get(&name) {
                Some(modes) => {
                    let mut index_positions = Vec::new();
                    let mut output_positions = Vec::new();
                    let mut lattices = Vec::new();
                    for (i, mode) in modes.modes.iter().enumerate() {
                        match lattice_for(program, mode) {
                            None => index_positions.push(i),
                            Some(l) => {
                                output_positions.push(i);
                                lattices.push(l);
                            }
                        }
                    }
                    let lattice = if lattices.len() == 1 {
                        lattices.pop().expect("one lattice")
                    } else {
                        LatticeSpec::Product(lattices)
                    };
                    PredSpec {
                        name: name.clone(),
                        arity,
                        index_positions,
                        output_positions,
                        lattice,
                    }
                }
                None => PredSpec::discrete(name.clone(), arity),
            };
            preds.insert(name, spec);
        }
        Specs { preds }
    }

    pub fn insert(&mut self, spec: PredSpec) {
        self.preds.insert(spec.name.clone(), spec);
    }

    pub fn get(&self, pred: &str) -> Option<&PredSpec> {
        self.preds.get(pred)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredSpec> {
        self.preds.values()
    }

    fn for_atom(&self, atom: &Atom) -> Cow<'_, PredSpec> {
        match self.preds.get(&atom.pred) {
            Some(spec) => Cow::Borrowed(spec),
            None => Cow::Owned(PredSpec::discrete(atom.pred.clone(), atom.args.len())),
        }
    }

    fn for_key(&self, key: &Key) -> Cow<'_, PredSpec> {
        match self.preds.get(&key.pred) {
            Some(spec) => Cow::Borrowed(spec),
            None => Cow::Owned(PredSpec::discrete(key.pred.clone(), key.inputs.len())),
        }
    }

    pub fn lattice(&self, pred: &str) -> LatticeSpec {
        self.preds
            .get(pred)
            .map(|s| s.lattice.clone())
            .unwrap_or_else(LatticeSpec::discrete)
    }

    /// Table key and value of an atom.
    pub fn split(&self, atom: &Atom) -> Result<(Key, LatticeValue)> {
        self.for_atom(atom).split(atom)
    }

    /// The atom `ρ` produces for one non-bottom table entry.
    pub fn atom(&self, key: &Key, value: &LatticeValue) -> Result<Atom> {
        self.for_key(key).atom(&key.inputs, value)
    }

    /// Every predicate uses a lattice where joins always return an argument.
    pub fn all_linear(&self) -> bool {
        self.preds.values().all(|s| s.lattice.is_linear())
    }
}

fn lattice_for(program: &Program, mode: &Mode) -> Option<LatticeSpec> {
    Some(match mode {
        Mode::Index => return None,
        Mode::Min => LatticeSpec::Min,
        Mode::Max => LatticeSpec::Max,
        Mode::All => LatticeSpec::All,
        Mode::Lattice(name) => match &program.join_relations[name] {
            JoinRelation::Table(t) => LatticeSpec::Join(t.clone()),
            JoinRelation::Min => LatticeSpec::Min,
            JoinRelation::Max => LatticeSpec::Max,
            JoinRelation::ExtendedNatMax => LatticeSpec::ExtendedNat,
        },
        Mode::Po(name) => LatticeSpec::Po(program.order_relations[name].clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub pred: Name,
    pub inputs: Vec<Term>,
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_name(f, &self.pred)?;
        if self.inputs.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        write_args(f, &self.inputs)?;
        f.write_str(")")
    }
}

/// A table of aggregated answers. Never stores bottom.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerTable {
    entries: BTreeMap<Key, LatticeValue>,
}

impl AnswerTable {
    pub fn new() -> AnswerTable {
        AnswerTable::default()
    }

    pub fn get(&self, key: &Key) -> &LatticeValue {
        self.entries.get(key).unwrap_or(&LatticeValue::Bottom)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &LatticeValue)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> {
        self.entries.keys()
    }

    /// Joins `value` into the entry for `key`; returns whether it changed.
    pub fn join_entry(&mut self, specs: &Specs, key: Key, value: LatticeValue) -> Result<bool> {
        if value.is_bottom() {
            return Ok(false);
        }
        match self.entries.entry(key) {
            Entry::Vacant(slot) => {
                slot.insert(value);
                Ok(true)
            }
            Entry::Occupied(mut slot) => {
                let joined = join_values(&specs.lattice(&slot.key().pred), slot.get(), &value)?;
                if joined == *slot.get() {
                    Ok(false)
                } else {
                    slot.insert(joined);
                    Ok(true)
                }
            }
        }
    }

    /// Pointwise join.
    pub fn join(&self, specs: &Specs, other: &AnswerTable) -> Result<AnswerTable> {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.join_entry(specs, k.clone(), v.clone())?;
        }
        Ok(out)
    }

    /// Pointwise order.
    pub fn leq(&self, specs: &Specs, other: &AnswerTable) -> Result<bool> {
        for (k, v) in &self.entries {
            if !leq_values(&specs.lattice(&k.pred), v, other.get(k))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Entries whose predicate is in `preds`.
    pub fn restrict(&self, preds: &BTreeSet<Name>) -> AnswerTable {
        AnswerTable {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| preds.contains(&k.pred))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(Key, LatticeValue)> for AnswerTable {
    /// Builds a table from entries that are already aggregated, one per key.
    fn from_iter<I: IntoIterator<Item = (Key, LatticeValue)>>(iter: I) -> Self {
        AnswerTable {
            entries: iter.into_iter().filter(|(_, v)| !v.is_bottom()).collect(),
        }
    }
}

impl fmt::Display for AnswerTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} => {v}")?;
        }
        f.write_str("}")
    }
}

/// The singleton table of one atom.
pub fn eta(specs: &Specs, atom: &Atom) -> Result<AnswerTable> {
    let (key, value) = specs.split(atom)?;
    Ok(AnswerTable::from_iter([(key, value)]))
}

/// The set of atoms a table makes true.
pub fn rho(specs: &Specs, table: &AnswerTable) -> Result<Interpretation> {
    table.iter().map(|(k, v)| specs.atom(k, v)).collect()
}

/// Pointwise join of a finite family of tables.
pub fn table_join<'a, I>(specs: &Specs, tables: I) -> Result<AnswerTable>
where
    I: IntoIterator<Item = &'a AnswerTable>,
{
    let mut out = AnswerTable::new();
    for t in tables {
        for (k, v) in t.iter() {
            out.join_entry(specs, k.clone(), v.clone())?;
        }
    }
    Ok(out)
}

/// Join of the singleton tables of all atoms in `atoms`.
pub fn embed<'a, I>(specs: &Specs, atoms: I) -> Result<AnswerTable>
where
    I: IntoIterator<Item = &'a Atom>,
{
    let mut out = AnswerTable::new();
    for atom in atoms {
        let (k, v) = specs.split(atom)?;
        out.join_entry(specs, k, v)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use std::sync::Arc;

    fn atom(pred: &str, args: Vec<Term>) -> Atom {
        Atom::new(pred, args)
    }

    fn sym(s: &str) -> Term {
        Term::symbol(s)
    }

    fn example_specs() -> Specs {
        let p = parse_program(
            ":- table p(lattice(_,_,min/3)).\n:- table e/3.\nmin(X,Y,Z) :- Z is min(X,Y).\n\
             p(X,Y,1) :- e(X,Y,nt).\np(X,Y,D) :- p(X,Z,D1), p(Z,Y,D2), D is D1 + D2.\n\
             e(a,b,nt). e(b,c,nt). e(a,c,nt).\n",
        )
        .unwrap();
        Specs::from_program(&p)
    }

    #[test]
    fn eta_of_min_atom() {
        let specs = example_specs();
        let t = eta(&specs, &atom("p", vec![sym("a"), sym("b"), Term::Int(1)])).unwrap();
        let key = Key {
            pred: Arc::from("p"),
            inputs: vec![sym("a"), sym("b")],
        };
        assert_eq!(t.get(&key), &LatticeValue::Term(Term::Int(1)));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn eta_of_dummy_output_atom() {
        let specs = example_specs();
        let a = atom("e", vec![sym("a"), sym("b"), sym("nt")]);
        let t = eta(&specs, &a).unwrap();
        let key = Key {
            pred: Arc::from("e"),
            inputs: vec![sym("a"), sym("b"), sym("nt")],
        };
        assert_eq!(t.get(&key), &LatticeValue::unit());
        assert_eq!(rho(&specs, &t).unwrap(), Interpretation::from([a]));
    }

    #[test]
    fn eta_of_all_mode_atom() {
        let p = parse_program(":- table p(all). p(1).").unwrap();
        let specs = Specs::from_program(&p);
        let t = eta(&specs, &atom("p", vec![Term::Int(1)])).unwrap();
        let key = Key {
            pred: Arc::from("p"),
            inputs: vec![],
        };
        assert_eq!(t.get(&key), &LatticeValue::Set(BTreeSet::from([Term::Int(1)])));
    }

    #[test]
    fn rho_of_examples() {
        let specs = example_specs();
        let a = atom("p", vec![sym("a"), sym("b"), Term::Int(1)]);
        assert_eq!(rho(&specs, &eta(&specs, &a).unwrap()).unwrap(), Interpretation::from([a]));
        assert!(rho(&specs, &AnswerTable::new()).unwrap().is_empty());
        let two = eta(&specs, &atom("p", vec![sym("a"), sym("c"), Term::Int(2)])).unwrap();
        let one = eta(&specs, &atom("p", vec![sym("a"), sym("c"), Term::Int(1)])).unwrap();
        let joined = table_join(&specs, [&two, &one]).unwrap();
        assert_eq!(
            rho(&specs, &joined).unwrap(),
            Interpretation::from([atom("p", vec![sym("a"), sym("c"), Term::Int(1)])])
        );
    }

    #[test]
    fn max_join_and_empty_join() {
        let p = parse_program(":- table p(max). p(1).").unwrap();
        let specs = Specs::from_program(&p);
        let t1 = eta(&specs, &atom("p", vec![Term::Int(1)])).unwrap();
        let t2 = eta(&specs, &atom("p", vec![Term::Int(2)])).unwrap();
        assert_eq!(table_join(&specs, [&t1, &t2]).unwrap(), t2);
        assert!(t1.leq(&specs, &t2).unwrap());
        assert!(!t2.leq(&specs, &t1).unwrap());
        assert_eq!(table_join(&specs, []).unwrap(), AnswerTable::new());
    }

    #[test]
    fn output_positions_need_not_be_last() {
        let p = parse_program(":- table d(min, index, max). d(3, a, 1).").unwrap();
        let specs = Specs::from_program(&p);
        let a = atom("d", vec![Term::Int(3), sym("a"), Term::Int(1)]);
        let b = atom("d", vec![Term::Int(2), sym("a"), Term::Int(0)]);
        let t = embed(&specs, [&a, &b]).unwrap();
        assert_eq!(
            rho(&specs, &t).unwrap(),
            Interpretation::from([atom("d", vec![Term::Int(2), sym("a"), Term::Int(1)])])
        );
    }
}
