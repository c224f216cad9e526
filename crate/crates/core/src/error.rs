use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown episode ids: {}", .0.join(", "))]
    UnknownEpisodes(Vec<String>),

    #[error("non-numeric value {value:?} at row {row}, column `{column}`")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient list depth: achieved {achieved_w} feminine and {achieved_m} masculine words, need {target}")]
    InsufficientDepth { achieved_w: usize, achieved_m: usize, target: usize },

    #[error("no episodes qualify for tau = {tau}")]
    NoQualifiers { tau: f64 },

    #[error("missing labels for topics: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("provider error (status {status:?}, text {text_hash}): {message}")]
    Provider { status: Option<u16>, text_hash: String, message: String },

    #[error("embedding integrity error: {0}")]
    Integrity(String),

    #[error("missing prerequisite artifact {}: {hint}", .path.display())]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::MissingField(_) => "missing_field",
            Error::Invalid(_) => "invalid",
            Error::UnknownEpisodes(_) => "unknown_episodes",
            Error::NonNumeric { .. } => "non_numeric",
            Error::InsufficientData(_) => "insufficient_data",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::InsufficientDepth { .. } => "insufficient_depth",
            Error::NoQualifiers { .. } => "no_qualifiers",
            Error::MissingLabels(_) => "missing_labels",
            Error::Provider { .. } => "provider",
            Error::Integrity(_) => "integrity",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
