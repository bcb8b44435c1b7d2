//! Ground terms and atoms.
//!
//! These are the elements of the Herbrand universe and Herbrand base of a
//! program. Both carry a total order (integers, then symbols, then compound
//! terms, then lists) that every other module uses for deterministic
//! iteration and for the `min`/`max` tabling modes.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Interned-by-refcount identifier used for symbols, functors and predicate names.
pub type Name = Arc<str>;

/// A ground first-order term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Int(i64),
    Symbol(Name),
    Compound(Name, Vec<Term>),
    List(Vec<Term>),
}

impl Term {
    pub fn symbol(name: &str) -> Term {
        Term::Symbol(Arc::from(name))
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        Term::Compound(Arc::from(functor), args)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(i) => Some(*i),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Term::Int(_) => 0,
            Term::Symbol(_) => 1,
            Term::Compound(..) => 2,
            Term::List(_) => 3,
        }
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Int(a), Term::Int(b)) => a.cmp(b),
            (Term::Symbol(a), Term::Symbol(b)) => a.cmp(b),
            (Term::Compound(f, xs), Term::Compound(g, ys)) => f
                .cmp(g)
                .then_with(|| xs.len().cmp(&ys.len()))
                .then_with(|| xs.cmp(ys)),
            (Term::List(xs), Term::List(ys)) => xs.cmp(ys),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Term {
    fn from(value: i64) -> Self {
        Term::Int(value)
    }
}

/// Whether `name` can be printed as a bare (unquoted) atom.
pub(crate) fn is_plain_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn write_name(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if is_plain_name(name) {
        f.write_str(name)
    } else {
        f.write_str("'")?;
        for c in name.chars() {
            match c {
                '\'' => f.write_str("\\'")?,
                '\\' => f.write_str("\\\\")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("'")
    }
}

pub(crate) fn write_args<T: fmt::Display>(f: &mut fmt::Formatter<'_>, args: &[T]) -> fmt::Result {
    for (i, arg) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{arg}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(i) => write!(f, "{i}"),
            Term::Symbol(s) => write_name(f, s),
            Term::Compound(functor, args) => {
                write_name(f, functor)?;
                f.write_str("(")?;
                write_args(f, args)?;
                f.write_str(")")
            }
            Term::List(items) => {
                f.write_str("[")?;
                write_args(f, items)?;
                f.write_str("]")
            }
        }
    }
}

/// A ground atom `pred(args...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom {
            pred: Arc::from(pred),
            args,
        }
    }
}

impl fmt::Display for Atom {
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
