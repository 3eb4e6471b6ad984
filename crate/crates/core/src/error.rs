use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps to a short machine-readable code (see [`Error::code`])
/// which the command-line tool prints as `ERR <code> <message>`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown symbol `{symbol}`{}", location_suffix(.location))]
    UnknownSymbol { symbol: String, location: Option<String> },

    #[error("{}:{line}: {message}", .file.display())]
    Parse { file: PathBuf, line: usize, message: String },

    #[error("cannot rank variants of `{orthography}`: {first} vs {second}")]
    Conflict { orthography: String, first: String, second: String },

    #[error("`{0}` not found")]
    NotFound(String),

    #[error("cost model cannot price `{0}`")]
    SymbolOutsideModel(String),

    #[error("{count} symbols attach to source position {index} (max 2)")]
    OverfullChunk { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite loss at epoch {epoch}, batch {batch} (learning rate {learning_rate})")]
    NonFiniteLoss { epoch: usize, batch: usize, learning_rate: f64 },

    #[error("tier mismatch in {utterance}: {message}")]
    TierMismatch { utterance: String, message: String },

    #[error("insufficient data: requested {requested} words, corpus has {available}")]
    InsufficientData { requested: usize, available: usize },

    #[error("unsupported character {0:?}")]
    UnsupportedCharacter(char),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("rule conflict: {0}")]
    RuleConflict(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid model file: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location_suffix(location: &Option<String>) -> String {
    match location {
        Some(loc) => format!(" at {loc}"),
        None => String::new(),
    }
}

impl Error {
    pub fn unknown_symbol(symbol: impl Into<String>) -> Self {
        Error::UnknownSymbol { symbol: symbol.into(), location: None }
    }

    pub fn unknown_symbol_at(symbol: impl Into<String>, location: impl Into<String>) -> Self {
        Error::UnknownSymbol { symbol: symbol.into(), location: Some(location.into()) }
    }

    pub fn parse(file: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), line, message: message.into() }
    }

    /// Attach a location to an `UnknownSymbol` error that lacks one.
    pub fn at(self, location: impl Into<String>) -> Self {
        match self {
            Error::UnknownSymbol { symbol, location: None } => {
                Error::UnknownSymbol { symbol, location: Some(location.into()) }
            }
            other => other,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownSymbol { .. } => "unknown-symbol",
            Error::Parse { .. } => "parse",
            Error::Conflict { .. } => "conflict",
            Error::NotFound(_) => "not-found",
            Error::SymbolOutsideModel(_) => "symbol-outside-model",
            Error::OverfullChunk { .. } => "overfull-chunk",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::EmptyDataset => "empty-dataset",
            Error::NonFiniteLoss { .. } => "non-finite-loss",
            Error::TierMismatch { .. } => "tier-mismatch",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::UnsupportedCharacter(_) => "unsupported-character",
            Error::IndexOutOfRange(_) => "index-out-of-range",
            Error::RuleConflict(_) => "rule-conflict",
            Error::LengthMismatch(..) => "length-mismatch",
            Error::Model(_) => "model",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
        }
    }
}
