//! Output lattices for the tabling modes.
//!
//! Every tabled argument position is interpreted in a join-semilattice with an
//! adjoined bottom. Values are converted from terms with [`abstract_output`]
//! and back with [`represent_output`]; the latter is a right inverse of the
//! former, so `abstract_output(represent_output(v)) == v` for every non-bottom
//! value `v`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::term::{write_args, Name, Term};

/// Symbol used for the top element of the extended naturals.
pub const INFTY: &str = "infty";

/// A user-supplied binary join, given extensionally as `name(X, Y, Z)` facts.
///
/// The table is stored symmetrically and idempotence is built in, so
/// `lub(X,X,X)` does not need to be listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTable {
    name: Name,
    pairs: BTreeMap<(Term, Term), Term>,
}

impl JoinTable {
    pub fn from_triples<I>(name: &str, triples: I) -> Result<JoinTable>
    where
        I: IntoIterator<Item = (Term, Term, Term)>,
    {
        let mut pairs = BTreeMap::new();
        for (x, y, z) in triples {
            if x == y {
                if z != x {
                    return Err(Error::LatticeLaw(format!(
                        "{name}/3 is not idempotent: {name}({x},{x},{z})"
                    )));
                }
                continue;
            }
            let key = if x <= y { (x, y) } else { (y, x) };
            if let Some(previous) = pairs.get(&key) {
                if *previous != z {
                    return Err(Error::LatticeLaw(format!(
                        "{name}/3 is not a function: {} and {} joined to both {previous} and {z}",
                        key.0, key.1
                    )));
                }
            } else {
                pairs.insert(key, z);
            }
        }
        let table = JoinTable {
            name: Arc::from(name),
            pairs,
        };
        table.check_associative()?;
        Ok(table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Every term mentioned by the relation.
    pub fn carrier(&self) -> BTreeSet<Term> {
        let mut carrier = BTreeSet::new();
        for ((x, y), z) in &self.pairs {
            carrier.insert(x.clone());
            carrier.insert(y.clone());
            carrier.insert(z.clone());
        }
        carrier
    }

    pub fn join(&self, x: &Term, y: &Term) -> Result<Term> {
        if x == y {
            return Ok(x.clone());
        }
        let key = if x <= y {
            (x.clone(), y.clone())
        } else {
            (y.clone(), x.clone())
        };
        self.pairs
            .get(&key)
            .cloned()
            .ok_or_else(|| Error::JoinUndefined {
                relation: self.name.to_string(),
                left: x.to_string(),
                right: y.to_string(),
            })
    }

    // Pairs whose joins are undefined are skipped here; they only become an
    // error if evaluation actually needs them.
    fn check_associative(&self) -> Result<()> {
        let carrier: Vec<Term> = self.carrier().into_iter().collect();
        for x in &carrier {
            for y in &carrier {
                let Ok(xy) = self.join(x, y) else { continue };
                for z in &carrier {
                    let (Ok(left), Ok(yz)) = (self.join(&xy, z), self.join(y, z)) else {
                        continue;
                    };
                    let Ok(right) = self.join(x, &yz) else { continue };
                    if left != right {
                        return Err(Error::LatticeLaw(format!(
                            "{}/3 is not associative on {x}, {y}, {z}: {left} vs {right}",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A partial order given by `name(X, Y)` facts meaning `X ⪯ Y`.
///
/// Reflexivity is implicit. The pairs must already be transitively closed and
/// antisymmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrder {
    name: Name,
    below: BTreeSet<(Term, Term)>,
}

impl PartialOrder {
    pub fn from_pairs<I>(name: &str, pairs: I) -> Result<PartialOrder>
    where
        I: IntoIterator<Item = (Term, Term)>,
    {
        let below: BTreeSet<(Term, Term)> = pairs.into_iter().filter(|(x, y)| x != y).collect();
        for (x, y) in &below {
            if below.contains(&(y.clone(), x.clone())) {
                return Err(Error::LatticeLaw(format!(
                    "{name}/2 is not antisymmetric: {x} and {y} are mutually below each other"
                )));
            }
            for (y2, z) in below.range((y.clone(), Term::Int(i64::MIN))..) {
                if y2 != y {
                    break;
                }
                if x != z && !below.contains(&(x.clone(), z.clone())) {
                    return Err(Error::LatticeLaw(format!(
                        "{name}/2 is not transitive: {name}({x},{y}) and {name}({y},{z}) but not {name}({x},{z})"
                    )));
                }
            }
        }
        Ok(PartialOrder {
            name: Arc::from(name),
            below,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn leq(&self, x: &Term, y: &Term) -> bool {
        x == y || self.below.contains(&(x.clone(), y.clone()))
    }

    /// Keeps only the maximal elements of `set`.
    pub fn maximal(&self, set: BTreeSet<Term>) -> BTreeSet<Term> {
        let dominated: Vec<Term> = set
            .iter()
            .filter(|x| set.iter().any(|y| *x != y && self.leq(x, y)))
            .cloned()
            .collect();
        let mut set = set;
        for x in dominated {
            set.remove(&x);
        }
        set
    }
}

/// The lattice attached to one output position (or, via `Product`, to all
/// output positions of a predicate).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeSpec {
    /// Terms ordered by the reverse of the standard order; join is the minimum.
    Min,
    /// Terms in the standard order; join is the maximum.
    Max,
    /// Finite sets of terms under inclusion.
    All,
    /// User-defined join relation (`lattice(Name/3)`).
    Join(Arc<JoinTable>),
    /// Antichains of a user partial order (`po(Name/2)`).
    Po(Arc<PartialOrder>),
    /// Naturals extended with a top element, written `infty`; join is the maximum.
    ExtendedNat,
    /// Componentwise product. The empty product is the one-point lattice used
    /// for predicates without output arguments.
    Product(Vec<LatticeSpec>),
}

impl LatticeSpec {
    /// One-point lattice: the value of an all-index (or untabled) predicate.
    pub fn discrete() -> LatticeSpec {
        LatticeSpec::Product(Vec::new())
    }

    /// True when the join of two values is always one of them.
    pub fn is_linear(&self) -> bool {
        match self {
            LatticeSpec::Min | LatticeSpec::Max | LatticeSpec::ExtendedNat => true,
            LatticeSpec::Product(specs) => specs.is_empty(),
            _ => false,
        }
    }
}

/// An element of an output lattice, with the adjoined bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatticeValue {
    Bottom,
    Term(Term),
    Set(BTreeSet<Term>),
    Inf,
    Product(Vec<LatticeValue>),
}

impl LatticeValue {
    pub fn unit() -> LatticeValue {
        LatticeValue::Product(Vec::new())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, LatticeValue::Bottom)
    }
}

impl fmt::Display for LatticeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeValue::Bottom => f.write_str("bot"),
            LatticeValue::Term(t) => write!(f, "{t}"),
            LatticeValue::Set(items) => {
                f.write_str("{")?;
                let items: Vec<&Term> = items.iter().collect();
                write_args(f, &items)?;
                f.write_str("}")
            }
            LatticeValue::Inf => f.write_str(INFTY),
            LatticeValue::Product(items) => {
                f.write_str("(")?;
                write_args(f, items)?;
                f.write_str(")")
            }
        }
    }
}

fn domain_mismatch(spec: &LatticeSpec, x: &LatticeValue) -> Error {
    Error::Internal(format!("value {x} does not belong to lattice {spec:?}"))
}

/// Least upper bound of `x` and `y`.
pub fn join_values(spec: &LatticeSpec, x: &LatticeValue, y: &LatticeValue) -> Result<LatticeValue> {
    use LatticeValue as V;
    match (x, y) {
        (V::Bottom, _) => return Ok(y.clone()),
        (_, V::Bottom) => return Ok(x.clone()),
        _ => {}
    }
    match (spec, x, y) {
        (LatticeSpec::Min, V::Term(a), V::Term(b)) => Ok(V::Term(a.min(b).clone())),
        (LatticeSpec::Max, V::Term(a), V::Term(b)) => Ok(V::Term(a.max(b).clone())),
        (LatticeSpec::All, V::Set(a), V::Set(b)) => Ok(V::Set(a.union(b).cloned().collect())),
        (LatticeSpec::Join(table), V::Term(a), V::Term(b)) => Ok(V::Term(table.join(a, b)?)),
        (LatticeSpec::Po(order), V::Set(a), V::Set(b)) => {
            Ok(V::Set(order.maximal(a.union(b).cloned().collect())))
        }
        (LatticeSpec::ExtendedNat, V::Inf, V::Inf | V::Term(_))
        | (LatticeSpec::ExtendedNat, V::Term(_), V::Inf) => Ok(V::Inf),
        (LatticeSpec::ExtendedNat, V::Term(a), V::Term(b)) => Ok(V::Term(a.max(b).clone())),
        (LatticeSpec::Product(specs), V::Product(a), V::Product(b))
            if specs.len() == a.len() && specs.len() == b.len() =>
        {
            let parts = specs
                .iter()
                .zip(a.iter().zip(b))
                .map(|(s, (a, b))| join_values(s, a, b))
                .collect::<Result<Vec<_>>>()?;
            Ok(V::Product(parts))
        }
        (spec, V::Term(_) | V::Set(_) | V::Inf | V::Product(_), _) => {
            let bad = if value_fits(spec, x) { y } else { x };
            Err(domain_mismatch(spec, bad))
        }
        (_, V::Bottom, _) => unreachable!(),
    }
}

fn value_fits(spec: &LatticeSpec, x: &LatticeValue) -> bool {
    use LatticeValue as V;
    match (spec, x) {
        (_, V::Bottom) => true,
        (LatticeSpec::Min | LatticeSpec::Max | LatticeSpec::Join(_), V::Term(_)) => true,
        (LatticeSpec::All | LatticeSpec::Po(_), V::Set(_)) => true,
        (LatticeSpec::ExtendedNat, V::Inf | V::Term(Term::Int(_))) => true,
        (LatticeSpec::Product(specs), V::Product(parts)) => {
            specs.len() == parts.len() && specs.iter().zip(parts).all(|(s, p)| value_fits(s, p))
        }
        _ => false,
    }
}

/// `x ⊑ y`, i.e. `join(x, y) == y`.
pub fn leq_values(spec: &LatticeSpec, x: &LatticeValue, y: &LatticeValue) -> Result<bool> {
    Ok(join_values(spec, x, y)? == *y)
}

/// Abstraction of a ground output term into the lattice. Never yields bottom.
pub fn abstract_output(spec: &LatticeSpec, pred: &str, x: &Term) -> Result<LatticeValue> {
    let domain_error = || Error::Domain {
        pred: pred.to_string(),
        term: x.to_string(),
    };
    match spec {
        LatticeSpec::Min | LatticeSpec::Max | LatticeSpec::Join(_) => {
            Ok(LatticeValue::Term(x.clone()))
        }
        LatticeSpec::All => Ok(LatticeValue::Set(set_elements(x))),
        LatticeSpec::Po(order) => Ok(LatticeValue::Set(order.maximal(set_elements(x)))),
        LatticeSpec::ExtendedNat => match x {
            Term::Symbol(s) if &**s == INFTY => Ok(LatticeValue::Inf),
            Term::Int(n) if *n >= 0 => Ok(LatticeValue::Term(x.clone())),
            _ => Err(domain_error()),
        },
        LatticeSpec::Product(specs) => match x {
            Term::List(items) if items.len() == specs.len() => Ok(LatticeValue::Product(
                specs
                    .iter()
                    .zip(items)
                    .map(|(s, t)| abstract_output(s, pred, t))
                    .collect::<Result<Vec<_>>>()?,
            )),
            _ => Err(domain_error()),
        },
    }
}

// A list term is read as the set it represents; any other term as a singleton.
fn set_elements(x: &Term) -> BTreeSet<Term> {
    match x {
        Term::List(items) => items.iter().cloned().collect(),
        other => BTreeSet::from([other.clone()]),
    }
}

/// Canonical term for a non-bottom lattice value.
pub fn represent_output(spec: &LatticeSpec, v: &LatticeValue) -> Result<Term> {
    match (spec, v) {
        (_, LatticeValue::Bottom) => Err(Error::Internal(
            "bottom has no term representation".to_string(),
        )),
        (_, LatticeValue::Term(t)) => Ok(t.clone()),
        (_, LatticeValue::Set(items)) => Ok(Term::List(items.iter().cloned().collect())),
        (_, LatticeValue::Inf) => Ok(Term::symbol(INFTY)),
        (LatticeSpec::Product(specs), LatticeValue::Product(parts)) if specs.len() == parts.len() => {
            Ok(Term::List(
                specs
                    .iter()
                    .zip(parts)
                    .map(|(s, p)| represent_output(s, p))
                    .collect::<Result<Vec<_>>>()?,
            ))
        }
        (spec, v) => Err(domain_mismatch(spec, v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn int(i: i64) -> LatticeValue {
        LatticeValue::Term(Term::Int(i))
    }

    fn sym(s: &str) -> Term {
        Term::symbol(s)
    }

    fn lub_table() -> JoinTable {
        let t = |x: &str, y: &str, z: &str| (sym(x), sym(y), sym(z));
        JoinTable::from_triples(
            "lub",
            vec![
                t("a", "b", "c"),
                t("a", "c", "c"),
                t("a", "d", "d"),
                t("b", "a", "c"),
                t("b", "c", "c"),
                t("b", "d", "d"),
                t("c", "d", "d"),
            ],
        )
        .unwrap()
    }

    fn diamond_order() -> PartialOrder {
        let p = |x: &str, y: &str| (sym(x), sym(y));
        PartialOrder::from_pairs("le", vec![p("a", "c"), p("b", "c")]).unwrap()
    }

    fn set(items: &[&str]) -> LatticeValue {
        LatticeValue::Set(items.iter().map(|s| sym(s)).collect())
    }

    #[test]
    fn min_and_max() {
        assert_eq!(join_values(&LatticeSpec::Min, &int(1), &int(2)).unwrap(), int(1));
        assert_eq!(join_values(&LatticeSpec::Max, &int(1), &int(2)).unwrap(), int(2));
        assert!(leq_values(&LatticeSpec::Min, &int(2), &int(1)).unwrap());
        assert!(!leq_values(&LatticeSpec::Min, &int(1), &int(2)).unwrap());
    }

    #[test]
    fn user_join_is_symmetric() {
        let spec = LatticeSpec::Join(Arc::new(lub_table()));
        let a = LatticeValue::Term(sym("a"));
        let b = LatticeValue::Term(sym("b"));
        let c = LatticeValue::Term(sym("c"));
        assert_eq!(join_values(&spec, &a, &b).unwrap(), c);
        // only lub(a,c,c) is listed
        assert_eq!(join_values(&spec, &c, &a).unwrap(), c);
        assert_eq!(join_values(&spec, &c, &c).unwrap(), c);
    }

    #[test]
    fn missing_join_pair_is_an_error() {
        let spec = LatticeSpec::Join(Arc::new(lub_table()));
        let err = join_values(&spec, &LatticeValue::Term(sym("a")), &LatticeValue::Term(sym("z")))
            .unwrap_err();
        assert!(matches!(err, Error::JoinUndefined { .. }));
    }

    #[test]
    fn bad_join_tables_are_rejected() {
        let t = |x: &str, y: &str, z: &str| (sym(x), sym(y), sym(z));
        let err = JoinTable::from_triples("j", vec![t("a", "b", "c"), t("b", "a", "d")]).unwrap_err();
        assert!(matches!(err, Error::LatticeLaw(_)));
        let err = JoinTable::from_triples("j", vec![t("a", "a", "b")]).unwrap_err();
        assert!(matches!(err, Error::LatticeLaw(_)));
        // (a ∨ b) ∨ c = c ∨ c = c, but a ∨ (b ∨ c) = a ∨ d = d
        let err = JoinTable::from_triples(
            "j",
            vec![t("a", "b", "c"), t("b", "c", "d"), t("a", "d", "d"), t("c", "d", "d")],
        )
        .unwrap_err();
        assert!(matches!(err, Error::LatticeLaw(_)));
    }

    #[test]
    fn partial_order_validation() {
        let p = |x: &str, y: &str| (sym(x), sym(y));
        assert!(PartialOrder::from_pairs("r", vec![p("a", "b"), p("b", "a")]).is_err());
        assert!(PartialOrder::from_pairs("r", vec![p("a", "b"), p("b", "c")]).is_err());
        assert!(PartialOrder::from_pairs("r", vec![p("a", "b"), p("b", "c"), p("a", "c"), p("a", "a")]).is_ok());
    }

    #[test]
    fn po_join_keeps_maximal_elements() {
        let spec = LatticeSpec::Po(Arc::new(diamond_order()));
        assert_eq!(join_values(&spec, &set(&["a"]), &set(&["b"])).unwrap(), set(&["a", "b"]));
        assert_eq!(join_values(&spec, &set(&["a", "b"]), &set(&["c"])).unwrap(), set(&["c"]));
        assert!(leq_values(&spec, &set(&["a", "b"]), &set(&["c"])).unwrap());
        assert!(!leq_values(&spec, &set(&["c"]), &set(&["a", "b"])).unwrap());
    }

    #[test]
    fn bottom_is_least() {
        for spec in [LatticeSpec::Min, LatticeSpec::Max, LatticeSpec::ExtendedNat] {
            assert!(leq_values(&spec, &LatticeValue::Bottom, &int(4)).unwrap());
            assert_eq!(join_values(&spec, &int(4), &LatticeValue::Bottom).unwrap(), int(4));
            assert_eq!(join_values(&spec, &int(4), &int(4)).unwrap(), int(4));
        }
    }

    #[test]
    fn extended_naturals() {
        let spec = LatticeSpec::ExtendedNat;
        assert_eq!(abstract_output(&spec, "p", &sym(INFTY)).unwrap(), LatticeValue::Inf);
        assert_eq!(abstract_output(&spec, "p", &Term::Int(3)).unwrap(), int(3));
        assert_eq!(represent_output(&spec, &LatticeValue::Inf).unwrap(), sym(INFTY));
        assert_eq!(join_values(&spec, &int(7), &LatticeValue::Inf).unwrap(), LatticeValue::Inf);
        assert!(matches!(
            abstract_output(&spec, "p", &sym("a")),
            Err(Error::Domain { .. })
        ));
        assert!(abstract_output(&spec, "p", &Term::Int(-1)).is_err());
    }

    #[test]
    fn all_mode_abstraction() {
        let one = abstract_output(&LatticeSpec::All, "p", &Term::Int(1)).unwrap();
        assert_eq!(one, LatticeValue::Set(BTreeSet::from([Term::Int(1)])));
        let v = LatticeValue::Set(BTreeSet::from([Term::Int(2), Term::Int(1)]));
        assert_eq!(
            represent_output(&LatticeSpec::All, &v).unwrap(),
            Term::List(vec![Term::Int(1), Term::Int(2)])
        );
        assert_eq!(abstract_output(&LatticeSpec::Min, "p", &Term::Int(3)).unwrap(), int(3));
    }

    #[test]
    fn product_is_componentwise() {
        let spec = LatticeSpec::Product(vec![LatticeSpec::Min, LatticeSpec::Max]);
        let x = LatticeValue::Product(vec![int(1), int(1)]);
        let y = LatticeValue::Product(vec![int(2), int(2)]);
        assert_eq!(
            join_values(&spec, &x, &y).unwrap(),
            LatticeValue::Product(vec![int(1), int(2)])
        );
        let t = represent_output(&spec, &x).unwrap();
        assert_eq!(abstract_output(&spec, "p", &t).unwrap(), x);
    }

    fn arb_small_term() -> impl Strategy<Value = Term> {
        prop_oneof![(0i64..6).prop_map(Term::Int), prop::sample::select(vec!["a", "b"]).prop_map(sym)]
    }

    proptest! {
        #[test]
        fn all_mode_retraction(items in prop::collection::btree_set(arb_small_term(), 1..5)) {
            let v = LatticeValue::Set(items);
            let t = represent_output(&LatticeSpec::All, &v).unwrap();
            prop_assert_eq!(abstract_output(&LatticeSpec::All, "p", &t).unwrap(), v);
        }

        #[test]
        fn po_join_yields_antichain(
            xs in prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c"]).prop_map(sym), 1..4),
            ys in prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c"]).prop_map(sym), 1..4),
        ) {
            let order = diamond_order();
            let spec = LatticeSpec::Po(Arc::new(order.clone()));
            let x = LatticeValue::Set(order.maximal(xs));
            let y = LatticeValue::Set(order.maximal(ys));
            let LatticeValue::Set(joined) = join_values(&spec, &x, &y).unwrap() else {
                panic!("po join must produce a set");
            };
            for a in &joined {
                for b in &joined {
                    prop_assert!(a == b || !order.leq(a, b));
                }
            }
        }
    }
}
