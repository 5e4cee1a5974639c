use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building diagrams or running fixpoints.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid store configuration: {0}")]
    Config(String),

    #[error("level {level} out of range, diagram has {max} levels")]
    LevelOutOfRange { level: u32, max: u32 },

    #[error("child at level {child_level} cannot hang below level {level}")]
    ChildLevel { level: u32, child_level: u32 },

    #[error("expected {expected} children, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("value {value} outside domain 0..{domain}")]
    DomainValue { value: u32, domain: u32 },

    #[error("operation needs an internal node, got a terminal")]
    Terminal,

    #[error("node handle {0} does not belong to this store")]
    InvalidHandle(u32),

    #[error("dimension mismatch: {left} vs {right} variables")]
    Dimension { left: u32, right: u32 },

    #[error("binary-only operation on a store with domain {domain}")]
    BinaryOnly { domain: u32 },

    #[error("bad support variable {index} for {vars} variables (must be sorted, unique, in 1..={vars})")]
    Support { index: u32, vars: u32 },

    #[error("cannot merge an empty list of partial relations")]
    EmptyPartials,

    #[error("partition entries must be sorted by descending top level")]
    UnsortedPartials,

    #[error("system has no monolithic relation")]
    MissingMonolithic,

    #[error("system has no cube-level description to serialize")]
    NoDescription,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("state space of {bits} bits exceeds the explicit limit of {limit} bits")]
    TooLarge { bits: u32, limit: u32 },

    #[error("run exceeded its time budget")]
    Timeout,

    #[error("{0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
