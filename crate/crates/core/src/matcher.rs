//! Category patterns: literal terms, gap expressions (`large cell ...15
//! carcinoma`) and regexes, filtered by ban expressions, run over the whole
//! corpus and classified against the gold highlights.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{normalize, Corpus, Document, HighlightSpan, HighlightStore, Origin};
use crate::error::{Error, Result};

/// One pattern of a category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermExpression {
    pub segments: Vec<String>,
    /// Maximum characters between consecutive segments.
    pub gaps: Vec<usize>,
    pub is_regex: bool,
}

fn normalized_segment(raw: &str) -> Result<String> {
    let norm = normalize(raw.trim());
    if norm.is_empty() {
        return Err(Error::EmptyTerm(raw.to_owned()));
    }
    Ok(norm)
}

impl TermExpression {
    pub fn literal(term: &str) -> Result<Self> {
        Ok(Self {
            segments: vec![normalized_segment(term)?],
            gaps: Vec::new(),
            is_regex: false,
        })
    }

    pub fn gapped<S: AsRef<str>>(segments: &[S], gaps: &[usize]) -> Result<Self> {
        let rendered = || {
            segments
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" ... ")
        };
        if segments.is_empty() {
            return Err(Error::InvalidGapExpression {
                expression: rendered(),
                reason: "no segments".into(),
            });
        }
        if gaps.len() + 1 != segments.len() {
            return Err(Error::InvalidGapExpression {
                expression: rendered(),
                reason: format!(
                    "{} segments need {} gaps, got {}",
                    segments.len(),
                    segments.len() - 1,
                    gaps.len()
                ),
            });
        }
        let segments = segments
            .iter()
            .map(|s| normalized_segment(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            segments,
            gaps: gaps.to_vec(),
            is_regex: false,
        })
    }

    pub fn regex(source: &str) -> Result<Self> {
        Regex::new(source).map_err(|e| Error::InvalidRegex {
            expression: source.to_owned(),
            message: e.to_string(),
        })?;
        Ok(Self {
            segments: vec![source.to_owned()],
            gaps: Vec::new(),
            is_regex: true,
        })
    }

    /// Parses the typed form: `large cell ...15 carcinoma` (`…15` also
    /// accepted). Without a gap marker the input is a literal term.
    pub fn parse(input: &str) -> Result<Self> {
        let marker = Regex::new(r"(?:\.\.\.|…)\s*(\d+)").expect("static pattern");
        let mut segments = Vec::new();
        let mut gaps = Vec::new();
        let mut last = 0;
        for cap in marker.captures_iter(input) {
            let whole = cap.get(0).expect("group 0");
            segments.push(&input[last..whole.start()]);
            gaps.push(
                cap[1]
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidGapExpression {
                        expression: input.to_owned(),
                        reason: e.to_string(),
                    })?,
            );
            last = whole.end();
        }
        segments.push(&input[last..]);
        if gaps.is_empty() {
            Self::literal(input)
        } else {
            Self::gapped(&segments, &gaps)
        }
    }

    pub fn is_plain_term(&self) -> bool {
        !self.is_regex && self.segments.len() == 1
    }
}

impl fmt::Display for TermExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_regex {
            return write!(f, "/{}/", self.segments[0]);
        }
        write!(f, "{}", self.segments[0])?;
        for (seg, gap) in self.segments[1..].iter().zip(&self.gaps) {
            write!(f, " ...{gap} {seg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapExpressionDef {
    pub segments: Vec<String>,
    pub gaps: Vec<usize>,
}

/// A category as exchanged with clients and stored in session files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryDef {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub terms: Vec<String>,
    #[serde(default)]
    pub gap_expressions: Vec<GapExpressionDef>,
    #[serde(default)]
    pub regexes: Vec<String>,
    #[serde(default)]
    pub banwords: Vec<String>,
}

impl CategoryDef {
    pub fn with_terms(id: &str, terms: &[&str]) -> Self {
        Self {
            id: id.to_owned(),
            terms: terms.iter().map(|t| (*t).to_owned()).collect(),
            ..Self::default()
        }
    }
}

/// The category set of one entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCategories {
    pub entity: String,
    pub categories: Vec<CategoryDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryPattern {
    pub category_id: String,
    pub entity: String,
    pub label: String,
    pub expressions: Vec<TermExpression>,
    pub ban_expressions: Vec<String>,
}

impl CategoryPattern {
    /// Validates a definition. Expressions are numbered terms first, then
    /// gap expressions, then regexes.
    pub fn from_def(entity: &str, def: &CategoryDef) -> Result<Self> {
        if def.id.trim().is_empty() {
            return Err(Error::MissingCategoryId);
        }
        let mut expressions = Vec::new();
        for t in &def.terms {
            expressions.push(TermExpression::literal(t)?);
        }
        for g in &def.gap_expressions {
            expressions.push(TermExpression::gapped(&g.segments, &g.gaps)?);
        }
        for r in &def.regexes {
            expressions.push(TermExpression::regex(r)?);
        }
        if expressions.is_empty() {
            return Err(Error::EmptyCategory(def.id.clone()));
        }
        let ban_expressions = def
            .banwords
            .iter()
            .map(|b| normalized_segment(b))
            .collect::<Result<Vec<_>>>()?;
        let label = if def.label.trim().is_empty() {
            default_label(def)
        } else {
            def.label.clone()
        };
        Ok(Self {
            category_id: def.id.clone(),
            entity: entity.to_owned(),
            label,
            expressions,
            ban_expressions,
        })
    }
}

/// `'stade iv', 'stade 4'` style label built from what the user typed.
pub fn default_label(def: &CategoryDef) -> String {
    let mut parts: Vec<String> = def.terms.iter().map(|t| format!("'{t}'")).collect();
    parts.extend(def.gap_expressions.iter().map(|g| {
        let mut s = g.segments.first().cloned().unwrap_or_default();
        for (seg, gap) in g.segments.iter().skip(1).zip(&g.gaps) {
            s.push_str(&format!(" ...{gap} {seg}"));
        }
        format!("'{s}'")
    }));
    parts.extend(def.regexes.iter().map(|r| format!("/{r}/")));
    parts.join(", ")
}

/// Validates a whole category set: every definition compiles and ids are unique.
pub fn patterns_from_defs(entity: &str, defs: &[CategoryDef]) -> Result<Vec<CategoryPattern>> {
    let mut seen = std::collections::HashSet::new();
    defs.iter()
        .map(|d| {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::DuplicateCategory {
                    entity: entity.to_owned(),
                    category_id: d.id.clone(),
                });
            }
            CategoryPattern::from_def(entity, d)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Extra characters on each side of a match inside which a ban
    /// expression still suppresses it.
    #[serde(default)]
    pub ban_context_chars: usize,
}

#[derive(Debug, Clone)]
enum ExprMatcher {
    Literal(String),
    Gapped {
        segments: Vec<String>,
        gaps: Vec<usize>,
    },
    Regex(Regex),
}

/// A match before classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RawMatch {
    pub start: usize,
    pub end: usize,
    pub expression_index: usize,
}

#[derive(Debug, Clone)]
pub struct CompiledCategory {
    pattern: CategoryPattern,
    matchers: Vec<ExprMatcher>,
    ban_context: usize,
}

impl CompiledCategory {
    pub fn compile(pattern: &CategoryPattern, config: MatchConfig) -> Result<Self> {
        if pattern.expressions.is_empty() {
            return Err(Error::EmptyCategory(pattern.category_id.clone()));
        }
        let matchers = pattern
            .expressions
            .iter()
            .map(|e| {
                if e.is_regex {
                    let src = &e.segments[0];
                    Regex::new(src)
                        .map(ExprMatcher::Regex)
                        .map_err(|err| Error::InvalidRegex {
                            expression: src.clone(),
                            message: err.to_string(),
                        })
                } else if e.segments.iter().any(String::is_empty) {
                    Err(Error::EmptyTerm(e.to_string()))
                } else if e.segments.len() == 1 {
                    Ok(ExprMatcher::Literal(e.segments[0].clone()))
                } else {
                    Ok(ExprMatcher::Gapped {
                        segments: e.segments.clone(),
                        gaps: e.gaps.clone(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pattern: pattern.clone(),
            matchers,
            ban_context: config.ban_context_chars,
        })
    }

    pub fn pattern(&self) -> &CategoryPattern {
        &self.pattern
    }

    /// Every expression match in `doc` that survives the ban filter, before
    /// overlapping matches are merged. Sorted by (start, longest first).
    pub fn find_raw(&self, doc: &Document) -> Vec<RawMatch> {
        let mut out = Vec::new();
        for (i, m) in self.matchers.iter().enumerate() {
            let spans = match m {
                ExprMatcher::Literal(term) => doc.find_at_boundaries(term),
                ExprMatcher::Gapped { segments, gaps } => find_gapped(doc, segments, gaps),
                ExprMatcher::Regex(re) => re
                    .find_iter(doc.norm_text())
                    .filter(|m| !m.is_empty())
                    .map(|m| doc.char_range(m.range()))
                    .collect(),
            };
            out.extend(spans.into_iter().map(|(start, end)| RawMatch {
                start,
                end,
                expression_index: i,
            }));
        }
        if !self.pattern.ban_expressions.is_empty() {
            let bans: Vec<(usize, usize)> = self
                .pattern
                .ban_expressions
                .iter()
                .flat_map(|b| doc.find_at_boundaries(b))
                .collect();
            let ctx = self.ban_context;
            out.retain(|m| {
                let lo = m.start.saturating_sub(ctx);
                let hi = m.end + ctx;
                !bans.iter().any(|&(bs, be)| bs < hi && lo < be)
            });
        }
        out.sort_by(|a, b| {
            (a.start, std::cmp::Reverse(a.end), a.expression_index).cmp(&(
                b.start,
                std::cmp::Reverse(b.end),
                b.expression_index,
            ))
        });
        out.dedup_by(|a, b| a.start == b.start && a.end == b.end);
        out
    }

    /// Matches with overlaps resolved: of a run of overlapping matches the
    /// earliest-starting, longest one is kept.
    pub fn find(&self, doc: &Document) -> Vec<RawMatch> {
        let mut kept: Vec<RawMatch> = Vec::new();
        for m in self.find_raw(doc) {
            if kept.last().is_none_or(|k| m.start >= k.end) {
                kept.push(m);
            }
        }
        kept
    }
}

/// For every anchor occurrence of the first segment, the match whose
/// inter-segment gaps are lexicographically smallest, if any.
fn find_gapped(doc: &Document, segments: &[String], gaps: &[usize]) -> Vec<(usize, usize)> {
    let occurrences: Vec<Vec<(usize, usize)>> =
        segments.iter().map(|s| doc.find_at_boundaries(s)).collect();
    if occurrences.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    fn extend(
        occ: &[Vec<(usize, usize)>],
        gaps: &[usize],
        level: usize,
        prev_end: usize,
    ) -> Option<usize> {
        if level == occ.len() {
            return Some(prev_end);
        }
        let limit = prev_end + gaps[level - 1];
        let list = &occ[level];
        let from = list.partition_point(|&(s, _)| s < prev_end);
        list[from..]
            .iter()
            .take_while(|&&(s, _)| s <= limit)
            .find_map(|&(_, e)| extend(occ, gaps, level + 1, e))
    }
    occurrences[0]
        .iter()
        .filter_map(|&(s, e)| extend(&occurrences, gaps, 1, e).map(|end| (s, end)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "FP")]
    Fp,
    /// A former false positive whose span was added to the gold standard.
    #[serde(rename = "TP_CORR")]
    TpCorr,
}

impl Classification {
    pub fn is_positive(self) -> bool {
        matches!(self, Self::Tp | Self::TpCorr)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tp => "TP",
            Self::Fp => "FP",
            Self::TpCorr => "TP_CORR",
        }
    }
}

impl std::str::FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TP" => Ok(Self::Tp),
            "FP" => Ok(Self::Fp),
            "TP_CORR" | "TP(CORR)" => Ok(Self::TpCorr),
            other => Err(format!("unknown classification {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub category_id: String,
    pub expression_index: usize,
    pub classification: Classification,
    pub matched_highlight: Option<HighlightSpan>,
}

/// Stable identity of a match, used to key corrections.
pub fn match_id(doc_id: &str, start: usize, end: usize, category_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(doc_id.as_bytes());
    h.update([0]);
    h.update(start.to_le_bytes());
    h.update(end.to_le_bytes());
    h.update(category_id.as_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// TP when the span overlaps an expert highlight of `entity`, TP_CORR when it
/// only overlaps a correction-added one, FP otherwise.
pub fn classify<'a>(
    gold: &'a HighlightStore,
    entity: &str,
    doc_id: &str,
    start: usize,
    end: usize,
) -> (Classification, Option<&'a HighlightSpan>) {
    let mut corrected = None;
    for h in gold
        .overlapping(doc_id, start, end)
        .filter(|h| h.entity == entity)
    {
        match h.origin {
            Origin::Expert => return (Classification::Tp, Some(h)),
            Origin::Correction => {
                corrected.get_or_insert(h);
            }
        }
    }
    match corrected {
        Some(h) => (Classification::TpCorr, Some(h)),
        None => (Classification::Fp, None),
    }
}

/// Runs every category of `entity` over the corpus. Matches of different
/// categories are kept apart; overlaps within a category are merged.
pub fn run_entity(
    corpus: &Corpus,
    gold: &HighlightStore,
    entity: &str,
    categories: &[CategoryPattern],
    config: MatchConfig,
) -> Result<Vec<MatchRecord>> {
    let compiled = categories
        .iter()
        .map(|c| {
            if c.entity != entity {
                return Err(Error::CategoryEntityMismatch {
                    category_id: c.category_id.clone(),
                    expected: entity.to_owned(),
                    found: c.entity.clone(),
                });
            }
            CompiledCategory::compile(c, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    for doc in corpus.documents() {
        for cat in &compiled {
            for m in cat.find(doc) {
                let (classification, hl) = classify(gold, entity, doc.doc_id(), m.start, m.end);
                let category_id = &cat.pattern.category_id;
                records.push(MatchRecord {
                    match_id: match_id(doc.doc_id(), m.start, m.end, category_id),
                    doc_id: doc.doc_id().to_owned(),
                    start: m.start,
                    end: m.end,
                    surface: doc.slice(m.start, m.end).unwrap_or_default().to_owned(),
                    category_id: category_id.clone(),
                    expression_index: m.expression_index,
                    classification,
                    matched_highlight: hl.cloned(),
                });
            }
        }
    }
    records.sort_by(|a, b| {
        (&a.doc_id, a.start, &a.category_id, a.end).cmp(&(
            &b.doc_id,
            b.start,
            &b.category_id,
            b.end,
        ))
    });
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncategorizedGroup {
    pub surface: String,
    pub occurrences: usize,
}

/// Highlights of `entity` overlapped by none of `matches`, grouped by surface,
/// most frequent first.
pub fn uncategorized_highlights(
    gold: &HighlightStore,
    entity: &str,
    matches: &[MatchRecord],
) -> Vec<UncategorizedGroup> {
    let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
    for h in gold.for_entity(entity) {
        let caught = matches
            .iter()
            .any(|m| m.doc_id == h.doc_id && h.overlaps(m.start, m.end));
        if !caught {
            *groups.entry(h.surface.as_str()).or_default() += 1;
        }
    }
    let mut out: Vec<UncategorizedGroup> = groups
        .into_iter()
        .map(|(surface, occurrences)| UncategorizedGroup {
            surface: surface.to_owned(),
            occurrences,
        })
        .collect();
    out.sort_by(|a, b| {
        b.occurrences
            .cmp(&a.occurrences)
            .then_with(|| a.surface.cmp(&b.surface))
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacingRow {
    pub gap_chars: usize,
    pub cumulative_tp: usize,
    pub cumulative_fp: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacingProfile {
    pub entity: String,
    pub first: String,
    pub second: String,
    pub gap_cap: usize,
    pub rows: Vec<SpacingRow>,
}

impl SpacingProfile {
    /// TP/FP counts a gap threshold of `gap` would produce.
    pub fn at(&self, gap: usize) -> (usize, usize) {
        self.rows
            .iter()
            .take_while(|r| r.gap_chars <= gap)
            .last()
            .map_or((0, 0), |r| (r.cumulative_tp, r.cumulative_fp))
    }
}

/// For each occurrence of `first`, the nearest following `second` within
/// `gap_cap` characters; each pairing is classified against the gold
/// highlights and accumulated by gap size. Row `X` gives the counts of the
/// expression `first ...X second`, before ban filtering and merging.
pub fn spacing_profile(
    corpus: &Corpus,
    gold: &HighlightStore,
    entity: &str,
    first: &str,
    second: &str,
    gap_cap: usize,
) -> Result<SpacingProfile> {
    let first_n = normalized_segment(first)?;
    let second_n = normalized_segment(second)?;
    let mut by_gap: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for doc in corpus.documents() {
        let seconds = doc.find_at_boundaries(&second_n);
        if seconds.is_empty() {
            continue;
        }
        for (s, e) in doc.find_at_boundaries(&first_n) {
            let from = seconds.partition_point(|&(q, _)| q < e);
            let Some(&(q, qe)) = seconds.get(from) else {
                continue;
            };
            let gap = q - e;
            if gap > gap_cap {
                continue;
            }
            let (class, _) = classify(gold, entity, doc.doc_id(), s, qe);
            let slot = by_gap.entry(gap).or_default();
            if class.is_positive() {
                slot.0 += 1;
            } else {
                slot.1 += 1;
            }
        }
    }
    let (mut tp, mut fp) = (0, 0);
    let rows = by_gap
        .into_iter()
        .map(|(gap_chars, (t, f))| {
            tp += t;
            fp += f;
            SpacingRow {
                gap_chars,
                cumulative_tp: tp,
                cumulative_fp: fp,
            }
        })
        .collect();
    Ok(SpacingProfile {
        entity: entity.to_owned(),
        first: first_n,
        second: second_n,
        gap_cap,
        rows,
    })
}
