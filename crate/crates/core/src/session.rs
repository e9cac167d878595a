//! Project sessions and the workbench that serves every view from them.
//!
//! A [`ProjectSession`] is the persisted, user-edited state: category sets,
//! corrections, discarded terms and thresholds. A [`Workbench`] pairs it
//! with the loaded corpus and keeps one match snapshot per entity, rebuilt
//! after every mutation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analytics::{
    self, ConcordanceOptions, ConcordanceRow, HomogeneityScore, NgramCount, SigmoidParams,
    TermScore,
};
use crate::corpus::{import_highlights, load_corpus, Corpus, HighlightStore, RejectedRecord};
use crate::decision::{evaluate_checklist, ChecklistInputs, ChecklistResult, ChecklistThresholds};
use crate::error::{Error, Result};
use crate::matcher::{
    self, patterns_from_defs, CategoryDef, CategoryPattern, Classification, EntityCategories,
    MatchConfig, MatchRecord, SpacingProfile, UncategorizedGroup,
};
use crate::metrics::{
    self, CategoryMetrics, Correction, CorrectionLedger, EntityMetrics, RecallDistribution,
};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsConfig {
    pub sigmoid: SigmoidParams,
    pub top_terms: usize,
    pub top_ngrams: usize,
    pub max_ngram: usize,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            sigmoid: SigmoidParams::default(),
            top_terms: 10,
            top_ngrams: 5,
            max_ngram: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSession {
    pub schema_version: u64,
    pub session_id: String,
    pub corpus_path: PathBuf,
    pub highlights_path: PathBuf,
    #[serde(default)]
    pub categories: Vec<EntityCategories>,
    #[serde(default)]
    pub corrections: CorrectionLedger,
    #[serde(default)]
    pub discarded_terms: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub thresholds: ChecklistThresholds,
    #[serde(default)]
    pub match_config: MatchConfig,
    #[serde(default)]
    pub analytics: AnalyticsConfig,
}

impl ProjectSession {
    pub fn new(corpus_path: impl Into<PathBuf>, highlights_path: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            session_id: uuid::Uuid::new_v4().to_string(),
            corpus_path: corpus_path.into(),
            highlights_path: highlights_path.into(),
            categories: Vec::new(),
            corrections: CorrectionLedger::default(),
            discarded_terms: BTreeMap::new(),
            thresholds: ChecklistThresholds::default(),
            match_config: MatchConfig::default(),
            analytics: AnalyticsConfig::default(),
        }
    }

    pub fn categories_of(&self, entity: &str) -> &[CategoryDef] {
        self.categories
            .iter()
            .find(|c| c.entity == entity)
            .map_or(&[], |c| c.categories.as_slice())
    }

    fn set_categories_of(&mut self, entity: &str, defs: Vec<CategoryDef>) {
        match self.categories.iter_mut().find(|c| c.entity == entity) {
            Some(slot) => slot.categories = defs,
            None => {
                self.categories.push(EntityCategories {
                    entity: entity.to_owned(),
                    categories: defs,
                });
                self.categories.sort_by(|a, b| a.entity.cmp(&b.entity));
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |e: serde_json::Error| Error::SessionParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::SessionParse {
                path: path.to_path_buf(),
                message: "missing schema_version".into(),
            })?;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found,
                supported: SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value).map_err(parse_err)
    }

    /// Writes to a temporary file next to `path`, then renames it over
    /// `path`, so a crash never leaves a partial session file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
        tmp.write_all(self.to_json()?.as_bytes()).map_err(io_err)?;
        tmp.as_file().sync_all().map_err(io_err)?;
        tmp.persist(path).map_err(|e| io_err(e.error))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }
}

/// One row of the entity overview.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityOverview {
    pub entity: String,
    pub highlights: usize,
    pub corrected_highlights: usize,
    /// `None` when the entity's highlights hold no tokens.
    pub homogeneity: Option<HomogeneityScore>,
    /// Homogeneity includes correction-added highlights.
    pub includes_corrections: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecommendation {
    #[serde(flatten)]
    pub score: TermScore,
    pub ngrams: Vec<NgramCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityReport {
    pub entity: String,
    pub categories: Vec<CategoryMetrics>,
    pub entity_metrics: EntityMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub entities: Vec<EntityReport>,
    pub checklists: Vec<ChecklistResult>,
}

/// A match with its surrounding text, for review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRow {
    #[serde(flatten)]
    pub record: MatchRecord,
    pub category_label: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone)]
pub struct Workbench {
    corpus: Arc<Corpus>,
    expert: Arc<HighlightStore>,
    gold: Arc<HighlightStore>,
    session: ProjectSession,
    patterns: BTreeMap<String, Arc<Vec<CategoryPattern>>>,
    snapshots: BTreeMap<String, Arc<Vec<MatchRecord>>>,
}

pub struct Loaded {
    pub workbench: Workbench,
    pub rejected: Vec<RejectedRecord>,
}

impl Workbench {
    /// Loads corpus and highlights from the paths recorded in `session`.
    pub fn load(session: ProjectSession) -> Result<Loaded> {
        let corpus = load_corpus(&session.corpus_path)?;
        let import = import_highlights(&session.highlights_path, &corpus)?;
        let workbench = Self::open(Arc::new(corpus), Arc::new(import.store), session)?;
        Ok(Loaded {
            workbench,
            rejected: import.rejected,
        })
    }

    pub fn open(
        corpus: Arc<Corpus>,
        expert: Arc<HighlightStore>,
        session: ProjectSession,
    ) -> Result<Self> {
        session.thresholds.validate()?;
        for c in session.corrections.entries() {
            let h = &c.highlight;
            let doc = corpus.get(&h.doc_id).ok_or_else(|| {
                Error::InvalidSession(format!(
                    "correction {} names unknown document {}",
                    c.match_id, h.doc_id
                ))
            })?;
            if doc.slice(h.start, h.end) != Some(h.surface.as_str()) {
                return Err(Error::InvalidSession(format!(
                    "correction {} no longer matches the text of {}",
                    c.match_id, h.doc_id
                )));
            }
        }
        let mut wb = Self {
            gold: Arc::new(expert.with_added(session.corrections.highlights().cloned())),
            corpus,
            expert,
            session,
            patterns: BTreeMap::new(),
            snapshots: BTreeMap::new(),
        };
        let sets: Vec<EntityCategories> = wb.session.categories.clone();
        for set in sets {
            wb.require_entity(&set.entity)?;
            let patterns = patterns_from_defs(&set.entity, &set.categories)?;
            wb.patterns.insert(set.entity.clone(), Arc::new(patterns));
            wb.refresh(&set.entity)?;
        }
        Ok(wb)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn session(&self) -> &ProjectSession {
        &self.session
    }

    /// Expert and correction-added highlights.
    pub fn gold(&self) -> &HighlightStore {
        &self.gold
    }

    pub fn expert_highlights(&self) -> &HighlightStore {
        &self.expert
    }

    fn require_entity(&self, entity: &str) -> Result<()> {
        if self.expert.has_entity(entity) || self.gold.has_entity(entity) {
            Ok(())
        } else {
            Err(Error::UnknownEntity(entity.to_owned()))
        }
    }

    fn refresh(&mut self, entity: &str) -> Result<()> {
        let patterns = self.patterns.get(entity).cloned().unwrap_or_default();
        let records = matcher::run_entity(
            &self.corpus,
            &self.gold,
            entity,
            &patterns,
            self.session.match_config,
        )?;
        self.snapshots.insert(entity.to_owned(), Arc::new(records));
        Ok(())
    }

    fn rebuild_gold(&mut self) {
        self.gold = Arc::new(
            self.expert
                .with_added(self.session.corrections.highlights().cloned()),
        );
    }

    pub fn entities(&self) -> Vec<EntityOverview> {
        self.gold
            .entities()
            .map(|e| EntityOverview {
                entity: e.to_owned(),
                highlights: self.gold.count(e),
                corrected_highlights: self.gold.count(e) - self.expert.count(e),
                homogeneity: analytics::homogeneity(&self.gold, e, self.session.analytics.sigmoid)
                    .ok(),
                includes_corrections: self.gold.count(e) != self.expert.count(e),
            })
            .collect()
    }

    pub fn homogeneity(&self, entity: &str) -> Result<HomogeneityScore> {
        self.require_entity(entity)?;
        analytics::homogeneity(&self.gold, entity, self.session.analytics.sigmoid)
    }

    /// Top terms with their n-gram expansions; `extra_discards` add to the
    /// discards stored in the session.
    pub fn terms(
        &self,
        entity: &str,
        extra_discards: &[String],
    ) -> Result<Vec<TermRecommendation>> {
        self.require_entity(entity)?;
        let cfg = self.session.analytics;
        let mut discarded: HashSet<String> = self
            .session
            .discarded_terms
            .get(entity)
            .into_iter()
            .flatten()
            .cloned()
            .collect();
        discarded.extend(
            extra_discards
                .iter()
                .map(|t| crate::corpus::normalize(t.trim())),
        );
        analytics::frequent_terms(&self.gold, entity, &discarded, cfg.top_terms)?
            .into_iter()
            .map(|score| {
                let ngrams = analytics::ngram_expansions(
                    &self.gold,
                    entity,
                    &score.term,
                    cfg.top_ngrams,
                    cfg.max_ngram,
                )?;
                Ok(TermRecommendation { score, ngrams })
            })
            .collect()
    }

    pub fn set_discards(&mut self, entity: &str, terms: BTreeSet<String>) -> Result<()> {
        self.require_entity(entity)?;
        let terms: BTreeSet<String> = terms
            .iter()
            .map(|t| crate::corpus::normalize(t.trim()))
            .collect();
        if terms.is_empty() {
            self.session.discarded_terms.remove(entity);
        } else {
            self.session
                .discarded_terms
                .insert(entity.to_owned(), terms);
        }
        Ok(())
    }

    pub fn concordance(
        &self,
        query: &str,
        options: ConcordanceOptions,
    ) -> Result<Vec<ConcordanceRow>> {
        analytics::concordance(&self.corpus, &self.gold, query, options)
    }

    pub fn categories(&self, entity: &str) -> Result<&[CategoryDef]> {
        self.require_entity(entity)?;
        Ok(self.session.categories_of(entity))
    }

    pub fn patterns(&self, entity: &str) -> Arc<Vec<CategoryPattern>> {
        self.patterns.get(entity).cloned().unwrap_or_default()
    }

    /// Replaces the category set of `entity`. Nothing changes on error.
    pub fn set_categories(&mut self, entity: &str, defs: Vec<CategoryDef>) -> Result<()> {
        self.require_entity(entity)?;
        let patterns = patterns_from_defs(entity, &defs)?;
        self.session.set_categories_of(entity, defs);
        self.patterns.insert(entity.to_owned(), Arc::new(patterns));
        self.refresh(entity)
    }

    pub fn add_category(&mut self, entity: &str, def: CategoryDef) -> Result<()> {
        let mut defs = self.categories(entity)?.to_vec();
        defs.push(def);
        self.set_categories(entity, defs)
    }

    /// Current match snapshot of `entity` (empty without categories).
    pub fn matches(&self, entity: &str) -> Result<Arc<Vec<MatchRecord>>> {
        self.require_entity(entity)?;
        Ok(self.snapshots.get(entity).cloned().unwrap_or_default())
    }

    pub fn review(
        &self,
        entity: &str,
        class: Option<Classification>,
        window: usize,
    ) -> Result<Vec<ReviewRow>> {
        let patterns = self.patterns(entity);
        self.matches(entity)?
            .iter()
            .filter(|m| class.is_none_or(|c| m.classification == c))
            .map(|m| {
                let doc = self
                    .corpus
                    .get(&m.doc_id)
                    .ok_or_else(|| Error::UnknownDocument(m.doc_id.clone()))?;
                let (before, _) = crate::corpus::token_window(doc, m.start, window, 0)?;
                let (_, after) = crate::corpus::token_window(doc, m.end, 0, window)?;
                let category_label = patterns
                    .iter()
                    .find(|p| p.category_id == m.category_id)
                    .map(|p| p.label.clone())
                    .unwrap_or_default();
                Ok(ReviewRow {
                    record: m.clone(),
                    category_label,
                    before,
                    after,
                })
            })
            .collect()
    }

    pub fn uncategorized(&self, entity: &str) -> Result<Vec<UncategorizedGroup>> {
        let matches = self.matches(entity)?;
        Ok(matcher::uncategorized_highlights(
            &self.gold, entity, &matches,
        ))
    }

    pub fn spacing(
        &self,
        entity: &str,
        first: &str,
        second: &str,
        cap: usize,
    ) -> Result<SpacingProfile> {
        self.require_entity(entity)?;
        matcher::spacing_profile(&self.corpus, &self.gold, entity, first, second, cap)
    }

    pub fn category_metrics(&self, entity: &str) -> Result<Vec<CategoryMetrics>> {
        let matches = self.matches(entity)?;
        Ok(metrics::category_metrics(&self.patterns(entity), &matches))
    }

    pub fn entity_metrics(&self, entity: &str) -> Result<EntityMetrics> {
        let matches = self.matches(entity)?;
        let h = self.homogeneity(entity)?;
        metrics::entity_metrics(&self.gold, entity, h.transformed, &matches)
    }

    pub fn report(&self, entity: &str) -> Result<EntityReport> {
        Ok(EntityReport {
            entity: entity.to_owned(),
            categories: self.category_metrics(entity)?,
            entity_metrics: self.entity_metrics(entity)?,
        })
    }

    pub fn recall_distribution(&self, entity: &str) -> Result<RecallDistribution> {
        let matches = self.matches(entity)?;
        metrics::recall_distribution(&self.gold, entity, &self.patterns(entity), &matches)
    }

    fn find_match(&self, match_id: &str) -> Option<(&str, &MatchRecord)> {
        self.snapshots.iter().find_map(|(entity, recs)| {
            recs.iter()
                .find(|m| m.match_id == match_id)
                .map(|m| (entity.as_str(), m))
        })
    }

    /// Converts a false positive into a true positive, adding its span to
    /// the gold highlights.
    pub fn apply_correction(&mut self, match_id: &str) -> Result<EntityMetrics> {
        self.apply_correction_at(match_id, Utc::now())
    }

    pub fn apply_correction_at(
        &mut self,
        match_id: &str,
        at: DateTime<Utc>,
    ) -> Result<EntityMetrics> {
        if self.session.corrections.contains(match_id) {
            return Err(Error::AlreadyConverted(match_id.to_owned()));
        }
        let (entity, record) = self
            .find_match(match_id)
            .map(|(e, r)| (e.to_owned(), r.clone()))
            .ok_or_else(|| Error::UnknownMatch(match_id.to_owned()))?;
        self.session.corrections.convert(&record, &entity, at)?;
        self.rebuild_gold();
        self.refresh(&entity)?;
        self.entity_metrics(&entity)
    }

    pub fn undo_correction(&mut self, match_id: &str) -> Result<EntityMetrics> {
        let Correction { highlight, .. } = self.session.corrections.undo(match_id)?;
        self.rebuild_gold();
        self.refresh(&highlight.entity)?;
        self.entity_metrics(&highlight.entity)
    }

    pub fn set_thresholds(&mut self, thresholds: ChecklistThresholds) -> Result<()> {
        thresholds.validate()?;
        self.session.thresholds = thresholds;
        Ok(())
    }

    pub fn checklist(&self, entity: &str) -> Result<ChecklistResult> {
        let m = self.entity_metrics(entity)?;
        let has_categories = !self.patterns(entity).is_empty();
        let inputs = ChecklistInputs {
            highlights: m.highlights,
            homogeneity: m.homogeneity,
            has_categories,
            recall: has_categories.then_some(m.recall),
            precision: m.precision,
        };
        Ok(evaluate_checklist(
            entity,
            &inputs,
            &self.session.thresholds,
        ))
    }

    /// Metrics and checklist for every entity with highlights.
    pub fn full_report(&self) -> Result<FullReport> {
        let names: Vec<String> = self.gold.entities().map(str::to_owned).collect();
        let mut entities = Vec::with_capacity(names.len());
        let mut checklists = Vec::with_capacity(names.len());
        for e in &names {
            match self.report(e) {
                Ok(r) => entities.push(r),
                // entities whose highlights hold no tokens have no homogeneity
                Err(Error::EmptyPool(_)) => continue,
                Err(other) => return Err(other),
            }
            checklists.push(self.checklist(e)?);
        }
        Ok(FullReport {
            entities,
            checklists,
        })
    }
}
