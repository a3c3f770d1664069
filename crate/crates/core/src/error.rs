use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("radio range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("field dimensions must be positive, got {width} x {height}")]
    InvalidField { width: f64, height: f64 },
    #[error("topology has no nodes")]
    Empty,
    #[error("node {id} at ({x}, {y}) lies outside the field")]
    OutOfField { id: usize, x: f64, y: f64 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("no trust metrics")]
    NoTrustMetrics,
    #[error("trust metric {0} outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("current node is at base station")]
    AtBaseStation,
}

#[derive(Debug, Error, PartialEq)]
pub enum FlcError {
    #[error("variable `{variable}`: {reason}")]
    Variable { variable: String, reason: String },
    #[error("rule base: {0}")]
    Rules(String),
}

/// Configuration problems, always naming the offending field.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("topology file: {0}")]
    Topology(#[from] TopologyError),
    #[error("fuzzy controller: {0}")]
    Flc(#[from] FlcError),
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("source node {0} is dead")]
    DeadSource(usize),
    #[error("source node {0} is blocked")]
    BlockedSource(usize),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
