//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("type {0} has no outgoing edge")]
    DanglingType(usize),
    #[error("type graph is not connected (as an undirected graph)")]
    Disconnected,
    #[error("edge ({i}, {j}) has non-positive weight {rho}")]
    NonpositiveRho { i: usize, j: usize, rho: f64 },
    #[error("pair measure puts mass {weight} on ({i}, {j}) which is not an edge")]
    UnsupportedPair { i: usize, j: usize, weight: f64 },
    #[error("pair measure marginals differ by {gap} at index {index} (tolerance {tol})")]
    NotShiftInvariant { index: usize, gap: f64, tol: f64 },
    #[error("transition matrix row {row} sums to {sum}, not 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("transition matrix row {row} has negative entry at column {col}")]
    NegativeEntry { row: usize, col: usize },
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("path has no transitions")]
    EmptyPath,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("path enumeration would visit {paths} paths (guard {guard})")]
    TooLarge { paths: u128, guard: u128 },
    #[error("dynamic program exceeded its budget after {entries} (state, count) entries (budget {budget})")]
    DpBudgetExceeded { entries: usize, budget: usize },
    #[error("cycle enumeration not attempted for {n_types} types (limit {limit})")]
    EnumerationTooLarge { n_types: usize, limit: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("{name} must be positive, got {value}")]
    NonpositiveParameter { name: &'static str, value: f64 },
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    #[error("config is missing required key `{0}`")]
    MissingKey(&'static str),
}
