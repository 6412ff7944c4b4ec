use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported named state: {kind} with n = {n}")]
    UnsupportedState { kind: String, n: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is not positive semi-definite (min eigenvalue {0})")]
    NonPsdInput(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),

    #[error("too few states: need at least {need}, got {got}")]
    TooFewStates { need: usize, got: usize },

    #[error("count vector has zero total")]
    ZeroTotal,

    #[error("k = {k} out of range [1, {max}]")]
    KOutOfRange { k: usize, max: usize },

    #[error("bad bin edges: {0}")]
    BadEdges(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("no model registered for k = {0}")]
    MissingModel(usize),

    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("corrupt record: {0}")]
    CorruptRecord(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
