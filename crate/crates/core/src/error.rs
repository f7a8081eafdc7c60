use thiserror::Error;

use crate::diagram::Violation;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report.
///
/// Structural problems found by [`crate::validate`] travel as
/// [`Error::Invalid`] so the violation kind stays visible to callers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0}")]
    Invalid(Violation),
    #[error("diagram is not valid: {0}")]
    InvalidDiagram(Violation),
    #[error("arc(s) into `{0}` would form a directed cycle")]
    CycleWouldForm(String),
    #[error("diagram contains a directed cycle")]
    CycleDetected,
    #[error("joint state space of {states} entries exceeds the limit of {limit}")]
    TooLarge { states: u128, limit: u128 },
    #[error("no node named `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no outcome `{outcome}`")]
    UnknownOutcome { node: String, outcome: String },
    #[error("evidence has zero probability")]
    ZeroProbabilityEvidence,
    #[error("evidence may not be placed on the query target `{0}`")]
    EvidenceOnTarget(String),
    #[error("no arc {from} -> {to}")]
    NoSuchArc { from: String, to: String },
    #[error("node `{0}` has successors")]
    HasSuccessors(String),
    #[error("order is not a permutation of the diagram's nodes: {0}")]
    NotAPermutation(String),
    #[error("{count} elimination steps exceed the exhaustive search cap of 8")]
    TooLargeForExhaustive { count: usize },
    #[error("`{0}` given as both endpoints")]
    SameNode(String),
    #[error("`{0}` is in the conditioning set")]
    ConditionedEndpoint(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("no builtin example named `{0}`")]
    UnknownExample(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

impl Error {
    /// Stable identifier for the error, used on the CLI error stream.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Invalid(v) => v.kind.name(),
            Error::InvalidDiagram(_) => "InvalidDiagram",
            Error::CycleWouldForm(_) => "CycleWouldForm",
            Error::CycleDetected => "CycleDetected",
            Error::TooLarge { .. } => "TooLarge",
            Error::UnknownNode(_) => "UnknownNode",
            Error::UnknownOutcome { .. } => "UnknownOutcome",
            Error::ZeroProbabilityEvidence => "ZeroProbabilityEvidence",
            Error::EvidenceOnTarget(_) => "EvidenceOnTarget",
            Error::NoSuchArc { .. } => "NoSuchArc",
            Error::HasSuccessors(_) => "HasSuccessors",
            Error::NotAPermutation(_) => "NotAPermutation",
            Error::TooLargeForExhaustive { .. } => "TooLargeForExhaustive",
            Error::SameNode(_) => "SameNode",
            Error::ConditionedEndpoint(_) => "ConditionedEndpoint",
            Error::Parse { .. } => "ParseError",
            Error::Schema(_) => "SchemaError",
            Error::UnknownExample(_) => "UnknownExample",
            Error::InvalidParameters(_) => "InvalidParameters",
        }
    }
}
