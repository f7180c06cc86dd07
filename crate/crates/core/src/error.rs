use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used to pick process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Capacity,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("header mismatch: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },

    #[error("row {row}, attribute `{attribute}`: {reason} (value {value:?})")]
    InvalidValue {
        row: usize,
        attribute: String,
        value: String,
        reason: String,
    },

    #[error("row {row}, attribute `{attribute}`: missing value")]
    MissingValue { row: usize, attribute: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid hierarchy `{attribute}`: {message}")]
    Hierarchy { attribute: String, message: String },

    #[error("value {value:?} is outside the domain of hierarchy `{attribute}`")]
    OutsideDomain { attribute: String, value: String },

    #[error("level {level} out of range for hierarchy `{attribute}` ({level_count} levels)")]
    LevelOutOfRange {
        attribute: String,
        level: usize,
        level_count: usize,
    },

    #[error("cannot sample {requested} records from a dataset of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("no lattice node satisfies k={k} within suppression limit {suppression_limit}")]
    NoSatisfyingNode { k: usize, suppression_limit: f64 },

    #[error("level vector {level_vector} does not satisfy k={k} within suppression limit {suppression_limit}")]
    NotAnonymous {
        level_vector: String,
        k: usize,
        suppression_limit: f64,
    },

    #[error("anonymized view has no retained equivalence classes")]
    NoRetainedClasses,

    #[error("class {tuple:?} links to no population record")]
    UnlinkedClass { tuple: Vec<String> },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("removal budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("decoy class {tuple:?} has {available} records, {required} required")]
    InsufficientClass {
        tuple: Vec<String>,
        available: usize,
        required: usize,
    },

    #[error("invalid policy: {0}")]
    Policy(String),

    #[error("invalid population spec: {0}")]
    PopulationSpec(String),

    #[error("{0}")]
    Usage(String),

    #[error("registry invariant violated: {0}")]
    Registry(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn hierarchy(attribute: &str, message: impl Into<String>) -> Self {
        Error::Hierarchy {
            attribute: attribute.to_string(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Csv(e) if e.is_io_error() => ErrorClass::Io,
            Error::Capacity(_) | Error::BudgetExhausted(_) | Error::InsufficientClass { .. } => {
                ErrorClass::Capacity
            }
            _ => ErrorClass::Validation,
        }
    }
}
