use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus directory {0} does not exist")]
    MissingCorpusDir(PathBuf),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("file {0} is not valid UTF-8")]
    Undecodable(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown document {0}")]
    UnknownDocument(String),

    #[error("unknown entity {0}")]
    UnknownEntity(String),

    #[error("no highlights for entity {0}")]
    NoHighlights(String),

    #[error("highlights of entity {0} contain no tokens")]
    EmptyPool(String),

    #[error("offset {offset} out of bounds for document of length {len}")]
    OffsetOutOfBounds { offset: usize, len: usize },

    #[error("empty query")]
    EmptyQuery,

    #[error("term {0:?} is empty after normalization")]
    EmptyTerm(String),

    #[error("seed term {seed:?} does not occur in the highlights of {entity}")]
    SeedAbsent { entity: String, seed: String },

    #[error("invalid gap expression {expression:?}: {reason}")]
    InvalidGapExpression { expression: String, reason: String },

    #[error("invalid regular expression {expression:?}: {message}")]
    InvalidRegex { expression: String, message: String },

    #[error("category {0:?} has no term, gap expression or regex")]
    EmptyCategory(String),

    #[error("category id must not be empty")]
    MissingCategoryId,

    #[error("duplicate category id {category_id:?} for entity {entity}")]
    DuplicateCategory { entity: String, category_id: String },

    #[error("category {category_id:?} belongs to entity {found}, expected {expected}")]
    CategoryEntityMismatch {
        category_id: String,
        expected: String,
        found: String,
    },

    #[error("unknown match {0}")]
    UnknownMatch(String),

    #[error("match {0} is already converted")]
    AlreadyConverted(String),

    #[error("match {0} is not a false positive")]
    NotFalsePositive(String),

    #[error("match {0} has no recorded correction")]
    NotConverted(String),

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("session schema version {found} is not supported (expected {supported}); migrate the file first")]
    SchemaVersion { found: u64, supported: u64 },

    #[error("malformed session file {path}: {message}")]
    SessionParse { path: PathBuf, message: String },

    #[error("invalid session: {0}")]
    InvalidSession(String),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}
