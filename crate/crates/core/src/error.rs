use std::path::PathBuf;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to parse instance: {0}")]
    Parse(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("negative time {value} in {what} at {index:?}")]
    NegativeTime {
        what: &'static str,
        index: (usize, usize),
        value: f64,
    },

    #[error("invalid instance: {0}")]
    Invalid(String),

    #[error("instance infeasible: customer {customer} alone exceeds the {resource} capacity ({demand} > {capacity})")]
    CapacityInfeasible {
        customer: usize,
        resource: &'static str,
        demand: f64,
        capacity: f64,
    },

    #[error("service-set catalog would hold {pairs} (parking, set) pairs, above the cap of {cap}; use the heuristic instead")]
    CatalogTooLarge { pairs: u128, cap: u128 },

    #[error("service set of size {size} exceeds the supported maximum {max}")]
    UnsupportedSetSize { size: usize, max: usize },

    #[error("subproblem with {size} customers exceeds the exact limit {max}")]
    SubproblemTooLarge { size: usize, max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no feasible solution: {0}")]
    Infeasible(String),

    #[error("infeasible solution: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InfeasibleSolution(Vec<Violation>),

    #[error("search budget exhausted before optimality was proven")]
    BudgetExhausted,

    #[error("LP parse error on line {line}: {msg}")]
    LpParse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
