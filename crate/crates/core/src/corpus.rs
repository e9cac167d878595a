//! Corpus ingestion, text normalization, tokenization and the expert
//! highlight store.
//!
//! All offsets exposed by this module are character offsets into the
//! *normalized* text of a document (Unicode NFC followed by lowercasing).
//! Diacritics are kept as-is, so `métastase` and `metastase` are distinct.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// NFC, then lowercase.
pub fn normalize(text: &str) -> String {
    text.nfc().collect::<String>().to_lowercase()
}

/// Letters and digits form tokens; every other character separates them.
#[inline]
pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Maximal runs of letters/digits, as character spans.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        match (is_token_char(c), open) {
            (true, None) => open = Some(i),
            (false, Some(start)) => {
                spans.push(TokenSpan { start, end: i });
                open = None;
            }
            _ => {}
        }
        n = i + 1;
    }
    if let Some(start) = open {
        spans.push(TokenSpan { start, end: n });
    }
    spans
}

/// Token strings of `text` in order.
pub fn token_strings(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if is_token_char(c) {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// A corpus file with its normalized text and token index.
#[derive(Debug, Clone)]
pub struct Document {
    doc_id: String,
    raw_text: String,
    norm_text: String,
    token_spans: Vec<TokenSpan>,
    // byte offset of every char, plus a trailing entry for the text length
    char_bytes: Vec<usize>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let norm_text = normalize(&raw_text);
        let token_spans = tokenize(&norm_text);
        let mut char_bytes: Vec<usize> = norm_text.char_indices().map(|(b, _)| b).collect();
        char_bytes.push(norm_text.len());
        Self {
            doc_id: doc_id.into(),
            raw_text,
            norm_text,
            token_spans,
            char_bytes,
        }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn norm_text(&self) -> &str {
        &self.norm_text
    }

    pub fn token_spans(&self) -> &[TokenSpan] {
        &self.token_spans
    }

    /// Length of the normalized text in characters.
    pub fn char_len(&self) -> usize {
        self.char_bytes.len() - 1
    }

    /// Normalized text between two character offsets, `None` when out of bounds.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        if start > end || end > self.char_len() {
            return None;
        }
        Some(&self.norm_text[self.char_bytes[start]..self.char_bytes[end]])
    }

    pub fn token_str(&self, span: TokenSpan) -> &str {
        &self.norm_text[self.char_bytes[span.start]..self.char_bytes[span.end]]
    }

    fn char_at_byte(&self, byte: usize) -> usize {
        self.char_bytes.partition_point(|&b| b < byte)
    }

    pub fn byte_range(&self, start: usize, end: usize) -> std::ops::Range<usize> {
        self.char_bytes[start]..self.char_bytes[end]
    }

    /// Converts a byte range of the normalized text to character offsets.
    pub fn char_range(&self, bytes: std::ops::Range<usize>) -> (usize, usize) {
        (self.char_at_byte(bytes.start), self.char_at_byte(bytes.end))
    }

    /// True when `pos` falls strictly inside a token.
    pub fn is_inside_token(&self, pos: usize) -> bool {
        let idx = self.token_spans.partition_point(|t| t.start < pos);
        // the last token starting before `pos` is the only candidate
        idx > 0 && self.token_spans[idx - 1].end > pos
    }

    /// A position that does not split a token.
    pub fn is_boundary(&self, pos: usize) -> bool {
        !self.is_inside_token(pos)
    }

    /// Every occurrence of `needle` (already normalized), overlapping ones
    /// included, as character spans.
    pub fn find_all(&self, needle: &str) -> Vec<(usize, usize)> {
        let mut hits = Vec::new();
        if needle.is_empty() {
            return hits;
        }
        let needle_chars = needle.chars().count();
        let mut from = 0;
        while let Some(rel) = self.norm_text[from..].find(needle) {
            let byte = from + rel;
            let start = self.char_at_byte(byte);
            hits.push((start, start + needle_chars));
            // advance by one character so overlapping occurrences are seen
            from = self.char_bytes[start + 1];
        }
        hits
    }

    /// Occurrences of `needle` that begin at a token boundary. This is the
    /// prefix rule shared by the concordancer and literal category terms:
    /// `tumeur` matches the start of `tumeurs` but not the middle of `atumeur`.
    pub fn find_at_boundaries(&self, needle: &str) -> Vec<(usize, usize)> {
        self.find_all(needle)
            .into_iter()
            .filter(|&(s, _)| self.is_boundary(s))
            .collect()
    }
}

/// Up to `before` whole tokens preceding `center` and up to `after` tokens
/// following it, as text slices. A token cut by `center` counts as one token
/// on each side. Windows truncate silently at document edges.
pub fn token_window(
    doc: &Document,
    center: usize,
    before: usize,
    after: usize,
) -> Result<(String, String)> {
    if center > doc.char_len() {
        return Err(Error::OffsetOutOfBounds {
            offset: center,
            len: doc.char_len(),
        });
    }
    let spans = doc.token_spans();
    let left = if before == 0 {
        String::new()
    } else {
        let n_left = spans.partition_point(|t| t.start < center);
        if n_left == 0 {
            String::new()
        } else {
            let first = spans[n_left.saturating_sub(before)];
            doc.slice(first.start, center)
                .unwrap_or_default()
                .to_owned()
        }
    };
    let right = if after == 0 {
        String::new()
    } else {
        let first_idx = spans.partition_point(|t| t.end <= center);
        if first_idx >= spans.len() {
            String::new()
        } else {
            let last = spans[(first_idx + after).min(spans.len()) - 1];
            doc.slice(center, last.end).unwrap_or_default().to_owned()
        }
    };
    Ok((left, right))
}

/// The text corpus, ordered by document id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(mut docs: Vec<Document>) -> Self {
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let by_id = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i))
            .collect();
        Self { docs, by_id }
    }

    pub fn from_texts<I, S, T>(texts: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        Self::from_documents(
            texts
                .into_iter()
                .map(|(id, text)| Document::new(id, text))
                .collect(),
        )
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Loads every `.txt` file of `dir` as a document named after the file.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingCorpusDir(dir.to_path_buf()));
    }
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut docs = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        let is_txt = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("txt"));
        if !is_txt || !entry.file_type().map_err(io_err)?.is_file() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Undecodable(path.clone()))?;
        let doc_id = entry.file_name().to_string_lossy().into_owned();
        docs.push(Document::new(doc_id, text));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Corpus::from_documents(docs))
}

/// Where a gold highlight came from.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Marked by the field expert in the initial highlighting pass.
    #[default]
    Expert,
    /// Added when a false-positive match was converted to a true positive.
    Correction,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HighlightSpan {
    pub doc_id: String,
    pub entity: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(default)]
    pub origin: Origin,
}

impl HighlightSpan {
    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

/// One line of the highlight JSON Lines file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightRecord {
    pub doc: String,
    pub entity: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl From<&HighlightSpan> for HighlightRecord {
    fn from(span: &HighlightSpan) -> Self {
        Self {
            doc: span.doc_id.clone(),
            entity: span.entity.clone(),
            start: span.start,
            end: span.end,
            text: span.surface.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordProblem {
    Malformed { message: String },
    UnknownDocument { doc: String },
    EmptySpan,
    OutOfBounds { len: usize },
    SurfaceMismatch { expected: String, found: String },
    Duplicate,
}

impl fmt::Display for RecordProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Malformed { message } => write!(f, "malformed record: {message}"),
            Self::UnknownDocument { doc } => write!(f, "unknown document {doc}"),
            Self::EmptySpan => f.write_str("empty or inverted span"),
            Self::OutOfBounds { len } => write!(f, "span out of bounds (document length {len})"),
            Self::SurfaceMismatch { expected, found } => {
                write!(
                    f,
                    "surface mismatch: record has {found:?}, document has {expected:?}"
                )
            }
            Self::Duplicate => f.write_str("duplicate highlight"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRecord {
    /// 1-based line number in the source file.
    pub line: usize,
    pub problem: RecordProblem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCount {
    pub entity: String,
    pub highlights: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCatalog {
    pub entities: Vec<EntityCount>,
}

impl EntityCatalog {
    pub fn count(&self, entity: &str) -> usize {
        self.entities
            .iter()
            .find(|e| e.entity == entity)
            .map_or(0, |e| e.highlights)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.entity.as_str())
    }
}

/// Immutable set of gold highlights, indexed by entity and by document.
#[derive(Debug, Clone, Default)]
pub struct HighlightStore {
    spans: Vec<HighlightSpan>,
    by_entity: BTreeMap<String, Vec<usize>>,
    by_doc: HashMap<String, Vec<usize>>,
}

impl HighlightStore {
    pub fn new(mut spans: Vec<HighlightSpan>) -> Self {
        spans.sort_by(|a, b| {
            (&a.doc_id, a.start, a.end, &a.entity, a.origin)
                .cmp(&(&b.doc_id, b.start, b.end, &b.entity, b.origin))
        });
        let mut by_entity: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_doc: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in spans.iter().enumerate() {
            by_entity.entry(s.entity.clone()).or_default().push(i);
            by_doc.entry(s.doc_id.clone()).or_default().push(i);
        }
        Self {
            spans,
            by_entity,
            by_doc,
        }
    }

    /// A new store with `extra` appended.
    pub fn with_added(&self, extra: impl IntoIterator<Item = HighlightSpan>) -> Self {
        let mut spans = self.spans.clone();
        spans.extend(extra);
        Self::new(spans)
    }

    pub fn spans(&self) -> &[HighlightSpan] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn has_entity(&self, entity: &str) -> bool {
        self.by_entity.contains_key(entity)
    }

    /// Entity names with at least one highlight, sorted.
    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.by_entity.keys().map(String::as_str)
    }

    pub fn for_entity<'a>(&'a self, entity: &str) -> impl Iterator<Item = &'a HighlightSpan> + 'a {
        self.by_entity
            .get(entity)
            .into_iter()
            .flatten()
            .map(move |&i| &self.spans[i])
    }

    pub fn count(&self, entity: &str) -> usize {
        self.by_entity.get(entity).map_or(0, Vec::len)
    }

    /// Highlights of a document, ordered by (start, end).
    pub fn for_doc<'a>(&'a self, doc_id: &str) -> impl Iterator<Item = &'a HighlightSpan> + 'a {
        self.by_doc
            .get(doc_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.spans[i])
    }

    /// Highlights of `doc_id` overlapping `[start, end)`, by start offset.
    pub fn overlapping<'a>(
        &'a self,
        doc_id: &str,
        start: usize,
        end: usize,
    ) -> impl Iterator<Item = &'a HighlightSpan> + 'a {
        self.for_doc(doc_id)
            .take_while(move |h| h.start < end)
            .filter(move |h| h.overlaps(start, end))
    }

    pub fn catalog(&self) -> EntityCatalog {
        EntityCatalog {
            entities: self
                .by_entity
                .iter()
                .map(|(entity, idx)| EntityCount {
                    entity: entity.clone(),
                    highlights: idx.len(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HighlightImport {
    pub store: HighlightStore,
    pub catalog: EntityCatalog,
    pub rejected: Vec<RejectedRecord>,
}

/// Checks a record against the corpus and turns it into a span.
pub fn validate_record(
    record: &HighlightRecord,
    corpus: &Corpus,
) -> std::result::Result<HighlightSpan, RecordProblem> {
    let doc = corpus
        .get(&record.doc)
        .ok_or_else(|| RecordProblem::UnknownDocument {
            doc: record.doc.clone(),
        })?;
    if record.start >= record.end {
        return Err(RecordProblem::EmptySpan);
    }
    let found = doc
        .slice(record.start, record.end)
        .ok_or(RecordProblem::OutOfBounds {
            len: doc.char_len(),
        })?;
    if found != record.text {
        return Err(RecordProblem::SurfaceMismatch {
            expected: found.to_owned(),
            found: record.text.clone(),
        });
    }
    Ok(HighlightSpan {
        doc_id: record.doc.clone(),
        entity: record.entity.clone(),
        start: record.start,
        end: record.end,
        surface: found.to_owned(),
        origin: Origin::Expert,
    })
}

/// Parses highlight JSON Lines from a reader. Blank lines are skipped;
/// every other bad line is reported and left out of the store.
pub fn parse_highlights(reader: impl BufRead, corpus: &Corpus) -> std::io::Result<HighlightImport> {
    let mut spans = Vec::new();
    let mut rejected = Vec::new();
    let mut seen: HashSet<(String, String, usize, usize)> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let outcome = serde_json::from_str::<HighlightRecord>(&line)
            .map_err(|e| RecordProblem::Malformed {
                message: e.to_string(),
            })
            .and_then(|rec| validate_record(&rec, corpus))
            .and_then(|span| {
                let key = (
                    span.doc_id.clone(),
                    span.entity.clone(),
                    span.start,
                    span.end,
                );
                if seen.insert(key) {
                    Ok(span)
                } else {
                    Err(RecordProblem::Duplicate)
                }
            });
        match outcome {
            Ok(span) => spans.push(span),
            Err(problem) => rejected.push(RejectedRecord {
                line: line_no,
                problem,
            }),
        }
    }
    let store = HighlightStore::new(spans);
    let catalog = store.catalog();
    Ok(HighlightImport {
        store,
        catalog,
        rejected,
    })
}

pub fn import_highlights(path: impl AsRef<Path>, corpus: &Corpus) -> Result<HighlightImport> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    parse_highlights(BufReader::new(file), corpus).map_err(io_err)
}

/// Serializes spans as highlight JSON Lines.
pub fn write_highlights<'a>(spans: impl IntoIterator<Item = &'a HighlightSpan>) -> String {
    let mut out = String::new();
    for span in spans {
        let rec = HighlightRecord::from(span);
        out.push_str(&serde_json::to_string(&rec).expect("highlight record serializes"));
        out.push('\n');
    }
    out
}
