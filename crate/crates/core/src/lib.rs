//! Bottom-up evaluation of definite logic programs with lattice-moded
//! tables, in two flavours: aggregating once after computing the full model,
//! and aggregating greedily at every step. A checker looks for inputs on
//! which the two disagree.

pub mod builtin;
pub mod checker;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fixpoint;
pub mod greedy;
pub mod lattice;
pub mod parser;
pub mod program;
pub mod reference;
pub mod strata;
pub mod table;
pub mod term;

pub use error::{Error, Result};
pub use eval::Interpretation;
pub use fixpoint::{EvalConfig, FixpointResult, Outcome};
pub use lattice::{LatticeSpec, LatticeValue};
pub use parser::{parse_atom, parse_program};
pub use program::Program;
pub use table::{AnswerTable, Key, Specs};
pub use term::{Atom, Term};
