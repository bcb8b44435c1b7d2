//! `is/2`, `=/2` and integer comparisons.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::eval::{Env, Slot, VarMap};
use crate::program::{BuiltinOp, Literal, Pattern};
use crate::term::{Name, Term};

pub type Bindings = BTreeMap<Name, Term>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinOutcome {
    Success(Bindings),
    Failure,
}

/// Evaluates a builtin literal under `bindings`.
pub fn eval_builtin(lit: &Literal, bindings: &Bindings) -> Result<BuiltinOutcome> {
    let Literal::Builtin { op, lhs, rhs } = lit else {
        return Err(Error::Internal(format!("`{lit}` is not a builtin")));
    };
    let mut vars = VarMap::default();
    for name in bindings.keys() {
        vars.slot(name);
    }
    let lhs = vars.compile(lhs);
    let rhs = vars.compile(rhs);
    let mut env = Env::new(vars.len());
    for (name, value) in bindings {
        env.bind(vars.slot(name), value.clone());
    }
    if !run(*op, &lhs, &rhs, &mut env)? {
        return Ok(BuiltinOutcome::Failure);
    }
    let mut out = bindings.clone();
    for (name, slot) in vars.iter() {
        if let Some(v) = env.get(slot) {
            out.insert(name.clone(), v.clone());
        }
    }
    Ok(BuiltinOutcome::Success(out))
}

/// Runs a builtin over compiled operands, binding into `env` on success.
pub(crate) fn run(op: BuiltinOp, lhs: &Slot, rhs: &Slot, env: &mut Env) -> Result<bool> {
    match op {
        BuiltinOp::Is => match arith(rhs, env)? {
            Some(value) => Ok(env.unify(lhs, &Term::Int(value))),
            None => {
                let target = arith(lhs, env)?
                    .ok_or_else(|| instantiation("both sides of `is` have unbound variables".to_string()))?;
                solve(rhs, target, env)
            }
        },
        BuiltinOp::Eq => match (env.instantiate(lhs), env.instantiate(rhs)) {
            (Some(l), Some(r)) => Ok(l == r),
            (Some(l), None) => Ok(env.unify(rhs, &l)),
            (None, Some(r)) => Ok(env.unify(lhs, &r)),
            (None, None) => Err(instantiation("both sides of `=` have unbound variables".into())),
        },
        cmp => {
            let l = arith(lhs, env)?.ok_or_else(|| instantiation(format!("unbound variable in `{}`", cmp.symbol())))?;
            let r = arith(rhs, env)?.ok_or_else(|| instantiation(format!("unbound variable in `{}`", cmp.symbol())))?;
            Ok(match cmp {
                BuiltinOp::Lt => l < r,
                BuiltinOp::Le => l <= r,
                BuiltinOp::Gt => l > r,
                BuiltinOp::Ge => l >= r,
                BuiltinOp::Is | BuiltinOp::Eq => unreachable!(),
            })
        }
    }
}

fn instantiation(message: String) -> Error {
    Error::Type(format!("insufficiently instantiated: {message}"))
}

fn overflow() -> Error {
    Error::Type("integer overflow".to_string())
}

/// Integer value of an arithmetic expression, or `None` if it mentions an
/// unbound variable.
pub(crate) fn arith(expr: &Slot, env: &Env) -> Result<Option<i64>> {
    match expr {
        Slot::Int(i) => Ok(Some(*i)),
        Slot::Var(v) => match env.get(*v) {
            None => Ok(None),
            Some(Term::Int(i)) => Ok(Some(*i)),
            Some(other) => Err(Error::Type(format!("{other} is not an integer"))),
        },
        Slot::Compound(f, args) => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                match arith(a, env)? {
                    Some(v) => values.push(v),
                    None => return Ok(None),
                }
            }
            let value = match (&**f, values.as_slice()) {
                ("+", [a, b]) => a.checked_add(*b),
                ("-", [a, b]) => a.checked_sub(*b),
                ("*", [a, b]) => a.checked_mul(*b),
                ("-", [a]) => a.checked_neg(),
                ("min", [a, b]) => Some(*a.min(b)),
                ("max", [a, b]) => Some(*a.max(b)),
                _ => return Err(Error::Type(format!("{f}/{} is not an arithmetic function", args.len()))),
            };
            value.map(Some).ok_or_else(overflow)
        }
        Slot::Symbol(s) => Err(Error::Type(format!("{s} is not an integer"))),
        Slot::List(_) => Err(Error::Type("a list is not an integer".to_string())),
    }
}

// Binds the single unknown of `expr` so that it evaluates to `target`.
fn solve(expr: &Slot, target: i64, env: &mut Env) -> Result<bool> {
    match expr {
        Slot::Var(v) if env.get(*v).is_none() => {
            env.bind(*v, Term::Int(target));
            Ok(true)
        }
        Slot::Compound(f, args) => {
            let known: Vec<Option<i64>> = args.iter().map(|a| arith(a, env)).collect::<Result<_>>()?;
            match (&**f, args.as_slice(), known.as_slice()) {
                ("-", [a], [None]) => solve(a, target.checked_neg().ok_or_else(overflow)?, env),
                ("+", [_, b], [Some(k), None]) => solve(b, target.checked_sub(*k).ok_or_else(overflow)?, env),
                ("+", [a, _], [None, Some(k)]) => solve(a, target.checked_sub(*k).ok_or_else(overflow)?, env),
                ("-", [_, b], [Some(k), None]) => solve(b, k.checked_sub(target).ok_or_else(overflow)?, env),
                ("-", [a, _], [None, Some(k)]) => solve(a, target.checked_add(*k).ok_or_else(overflow)?, env),
                ("*", [_, x], [Some(k), None]) | ("*", [x, _], [None, Some(k)]) => {
                    if *k == 0 {
                        if target == 0 {
                            Err(instantiation("0 * X has no unique solution".into()))
                        } else {
                            Ok(false)
                        }
                    } else if target % k != 0 {
                        Ok(false)
                    } else {
                        solve(x, target / k, env)
                    }
                }
                _ => Err(instantiation(format!("cannot solve for an unknown inside {f}/{}", args.len()))),
            }
        }
        _ => Err(instantiation("right side of `is` cannot be solved".into())),
    }
}

/// The variable an `is` could bind by inverting `expr`, if `expr` has exactly
/// one unbound variable, occurring once, reachable only through `+`, `-` and `*`.
pub(crate) fn invertible_unknown(expr: &Pattern, is_bound: &dyn Fn(&Name) -> bool) -> Option<Name> {
    let free: Vec<Name> = expr.vars().into_iter().filter(|v| !is_bound(v)).collect();
    let [unknown] = free.as_slice() else { return None };
    let mut occurrences = 0;
    if invertible_path(expr, unknown, &mut occurrences) && occurrences == 1 {
        Some(unknown.clone())
    } else {
        None
    }
}

fn invertible_path(expr: &Pattern, unknown: &Name, occurrences: &mut usize) -> bool {
    match expr {
        Pattern::Var(v) => {
            if v == unknown {
                *occurrences += 1;
            }
            true
        }
        Pattern::Int(_) => true,
        Pattern::Compound(f, args) => {
            let contains = args.iter().any(|a| a.vars().contains(unknown));
            if !contains {
                return true;
            }
            let invertible = matches!((&**f, args.len()), ("+" | "-" | "*", 2) | ("-", 1));
            invertible && args.iter().all(|a| invertible_path(a, unknown, occurrences))
        }
        Pattern::Symbol(_) | Pattern::List(_) => !expr.vars().contains(unknown),
    }
}
