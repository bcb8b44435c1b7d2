use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{}{message}", location(*line, *col))]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("{}unsupported tabling mode `{mode}`", location(*line, *col))]
    UnsupportedMode {
        line: usize,
        col: usize,
        mode: String,
    },

    #[error("clause `{clause}` is not range-restricted: variable {var} is never bound")]
    RangeRestriction { clause: String, var: String },

    #[error("predicate {pred} used with arity {found}, expected {expected}")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
    },

    #[error("type error: {0}")]
    Type(String),

    #[error("join of {left} and {right} is undefined in relation {relation}/3")]
    JoinUndefined {
        relation: String,
        left: String,
        right: String,
    },

    #[error("lattice law violated: {0}")]
    LatticeLaw(String),

    #[error("term {term} is outside the output lattice of {pred}")]
    Domain { pred: String, term: String },

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

fn location(line: usize, col: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("{line}:{col}: ")
    }
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::UnsupportedMode { .. } => "unsupported_mode",
            Error::RangeRestriction { .. } => "range_restriction",
            Error::Arity { .. } => "arity",
            Error::Type(_) => "type",
            Error::JoinUndefined { .. } => "join_undefined",
            Error::LatticeLaw(_) => "lattice_law",
            Error::Domain { .. } => "domain",
            Error::Internal(_) => "internal",
        }
    }

    /// True for errors detected while reading a program, before any evaluation.
    pub fn is_static(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnsupportedMode { .. }
                | Error::RangeRestriction { .. }
                | Error::Arity { .. }
        )
    }
}
