use std::io;

use thiserror::Error;

/// Toolkit-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    /// Malformed CoNLL-U input; `line` is 1-based within the parsed text.
    #[error("conllu parse error at line {line}: {msg}")]
    Conllu { line: usize, msg: String },

    /// Head indices of a dependency sentence do not form a tree.
    #[error("dependency structure error: {0}")]
    Structure(String),

    /// A record in a line-delimited data file violates the schema;
    /// `record` is the 1-based line number.
    #[error("schema error at record {record}: {msg}")]
    Schema { record: usize, msg: String },

    /// Shape or arity mismatch between tensors or feature vectors.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Model file or checkpoint cannot be read or is inconsistent.
    #[error("model error: {0}")]
    Model(String),

    /// Input data violates an operation precondition.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
