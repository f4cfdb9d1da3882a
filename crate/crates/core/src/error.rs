use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("row {row}: component {component} is not finite")]
    NonFinite { row: usize, component: usize },

    #[error("{0} is undefined for an empty cluster")]
    EmptyCluster(&'static str),

    #[error("node has no entries")]
    EmptyNode,

    #[error("{what} needs at least {needed} points, got {found}")]
    TooFewPoints {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent clustering feature: {0}")]
    InvalidFeature(String),

    #[error("covariance of {} is not positive definite after regularization", cluster_label(.cluster))]
    NotPositiveDefinite { cluster: Option<usize> },

    #[error("row {row} is assigned to a cluster but has no class label")]
    Unlabeled { row: usize },

    #[error("{context}: no data rows")]
    EmptyInput { context: String },

    #[error("{}: column '{column}' not found", .path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("{}: line {line}, column '{column}': cannot parse '{value}' as a finite number", .path.display())]
    BadCell {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },

    #[error("{}: line {line} has {found} fields, expected {expected}", .path.display())]
    FieldCount {
        path: PathBuf,
        line: u64,
        found: usize,
        expected: usize,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("assignments are missing {count} dataset rows (first: {preview:?})")]
    MissingAssignments { count: usize, preview: Vec<usize> },

    #[error("assignment for row {row} is out of range for a dataset of {rows} rows")]
    UnknownRow { row: usize, rows: usize },

    #[error("row {row} is assigned more than once")]
    DuplicateAssignment { row: usize },

    #[error("the dataset has no class labels")]
    NoLabels,
}

fn cluster_label(cluster: &Option<usize>) -> String {
    match cluster {
        Some(i) => format!("cluster {i}"),
        None => "cluster".to_string(),
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::NotPositiveDefinite { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}
