use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,

    #[error("entry {value} at ({row}, {col}) is outside [0, {delta}]")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: i64,
        delta: i64,
    },

    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),

    #[error("rectangle is empty")]
    EmptyRectangle,

    #[error("index {index} out of range for {axis} of length {len}")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        len: usize,
    },

    #[error("exact integer elimination overflowed and arbitrary precision failed")]
    ExactOverflow,

    #[error("value {0} is outside the domain [-1, 1]")]
    HDomain(f64),

    #[error(
        "norm budget missed: max |u| = {max_u_norm:.6}, max |v| = {max_v_norm:.6}, \
         budget sqrt = {budget_norm:.6}"
    )]
    BudgetMiss {
        max_u_norm: f64,
        max_v_norm: f64,
        budget_norm: f64,
        factorization: Box<crate::gamma2::BalancedFactorization>,
    },

    #[error("target norm {target} is below an existing vector norm {found}")]
    PadBelowNorm { target: f64, found: f64 },

    #[error("factorization shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("premise violated: {0}")]
    PremiseViolation(String),

    #[error("build limits exceeded after {nodes} nodes (depth {depth})")]
    BuildLimits { nodes: usize, depth: usize },

    #[error("protocol verification failed at pair ({row}, {col}): expected {expected}, got {got}")]
    VerifyMismatch {
        row: usize,
        col: usize,
        expected: i64,
        got: i64,
    },

    #[error("leaf views do not partition the matrix: cell ({row}, {col}) covered {count} times")]
    LeafCover { row: usize, col: usize, count: usize },

    #[error("slack at facet {facet}, vertex {vertex} is not a nonnegative integer ({value})")]
    BadSlack {
        facet: usize,
        vertex: usize,
        value: String,
    },

    #[error("vertex {vertex} violates facet {facet} of the outer polytope")]
    VertexOutsideOuter { vertex: usize, facet: usize },

    #[error("lift witness failed at vertex {vertex}: {reason}")]
    LiftWitness { vertex: usize, reason: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("enumeration refused: {rows} rows exceed the cap of {cap}")]
    EnumerationCap { rows: usize, cap: usize },

    #[error("zero vector passed to a direction-dependent operation")]
    ZeroVector,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
