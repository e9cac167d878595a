//! Workbench for deciding, entity by entity, whether rule-based information
//! extraction is worth building.
//!
//! The flow mirrors how an annotation team uses it:
//!
//! 1. [`corpus`]: load a directory of plain-text reports and the expert's
//!    highlight file (JSON Lines standoff spans).
//! 2. [`analytics`]: look at each entity's lexical homogeneity, its top
//!    terms and their n-grams, and search the corpus with the concordancer.
//! 3. [`matcher`]: group highlights into categories of terms, gap
//!    expressions and regexes, with ban words against polysemy.
//! 4. [`metrics`]: read per-category and per-entity precision/recall, and
//!    convert false positives the expert missed.
//! 5. [`decision`]: evaluate the TH/LH/ER/EP checklist.
//!
//! [`session::Workbench`] ties these together over a persisted
//! [`session::ProjectSession`].

pub mod analytics;
pub mod corpus;
pub mod decision;
pub mod error;
pub mod matcher;
pub mod metrics;
pub mod session;

pub use analytics::{
    ConcordanceOptions, ConcordanceRow, HomogeneityScore, NgramCount, SigmoidParams, TermScore,
};
pub use corpus::{
    Corpus, Document, EntityCatalog, HighlightRecord, HighlightSpan, HighlightStore, Origin,
};
pub use decision::{ChecklistResult, ChecklistThresholds, Criterion, Status, Verdict};
pub use error::{Error, Result};
pub use matcher::{
    CategoryDef, CategoryPattern, Classification, EntityCategories, MatchConfig, MatchRecord,
    TermExpression,
};
pub use metrics::{CategoryMetrics, CorrectionLedger, EntityMetrics, RecallDistribution};
pub use session::{ProjectSession, Workbench};
