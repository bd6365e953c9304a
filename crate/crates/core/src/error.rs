use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` appears more than once")]
    DuplicateAxis(String),

    #[error("axis sets overlap on `{0}`")]
    OverlappingAxes(String),

    #[error("axis set must not be empty")]
    EmptyAxisSet,

    #[error("axis `{name}` has size {found}, expected {expected}")]
    AxisSize {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("table has {found} entries, axes require {expected}")]
    Shape { expected: usize, found: usize },

    #[error("entry {value} at {path} is not a valid probability")]
    InvalidEntry { path: String, value: f64 },

    #[error("{what} sums to {sum}, expected 1")]
    NotNormalized { what: String, sum: f64 },

    #[error("auxiliary alphabet `{name}` has {size} symbols, at most {max} allowed")]
    Cardinality {
        name: &'static str,
        size: usize,
        max: usize,
    },

    #[error("grid has {cells} cells, cap is {cap}")]
    GridCap { cells: u128, cap: u128 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("no estimate for observation cell {0:?}")]
    MissingEstimate(Vec<usize>),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("{0}")]
    Invalid(String),
}
