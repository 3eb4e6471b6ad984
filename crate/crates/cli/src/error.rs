//! Errors surfaced as `ERR <code> <message>` lines.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lexpost::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{}: {message}", .path.display())]
    Config { path: PathBuf, message: String },

    #[error("{key} refers to missing path {}", .path.display())]
    MissingFile { key: String, path: PathBuf },
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use lexpost::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::MissingFile { .. } => "missing-file",
            CliError::Core(e) => match e {
                E::UnknownSymbol { .. } => "unknown-symbol",
                E::Parse { .. } => "parse",
                E::Conflict { .. } => "conflict",
                E::NotFound(_) => "not-found",
                E::SymbolOutsideModel(_) => "symbol-outside-model",
                E::OverfullChunk { .. } => "overfull-chunk",
                E::DimensionMismatch { .. } => "dimension-mismatch",
                E::EmptyDataset => "empty-dataset",
                E::NonFiniteLoss { .. } => "non-finite-loss",
                E::TierMismatch { .. } => "tier-mismatch",
                E::InsufficientData { .. } => "insufficient-data",
                E::UnsupportedCharacter(_) => "unsupported-character",
                E::IndexOutOfRange(_) => "index-out-of-range",
                E::RuleConflict(_) => "rule-conflict",
                E::LengthMismatch(..) => "length-mismatch",
                E::Model(_) => "model",
                E::Invalid(_) => "invalid",
                E::Io(_) => "io",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
