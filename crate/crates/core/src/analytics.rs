//! Exploration quantities: lexical homogeneity of an entity's highlights,
//! term recommendations by a per-entity tf-idf, n-gram expansions of a
//! recommended term, and the keyword-in-context concordancer.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize, token_strings, token_window, Corpus, HighlightStore};
use crate::error::{Error, Result};

/// Label of concordance rows that overlap no highlight.
pub const NOT_ANNOTATED: &str = "Not annotated";

/// Logistic transform applied to the raw homogeneity ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub steepness: f64,
    /// The raw ratio that maps to 0.5.
    pub center: f64,
}

impl Default for SigmoidParams {
    fn default() -> Self {
        Self {
            steepness: 10.0,
            center: 0.5,
        }
    }
}

impl SigmoidParams {
    pub fn apply(&self, ratio: f64) -> f64 {
        sigmoid(ratio - self.center, self.steepness)
    }
}

pub fn sigmoid(x: f64, k: f64) -> f64 {
    1.0 / (1.0 + (-k * x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityScore {
    pub entity: String,
    pub total_tokens: usize,
    pub unique_tokens: usize,
    /// `(total - unique) / total`, in `[0, 1)`.
    pub ratio: f64,
    pub steepness: f64,
    pub center: f64,
    pub transformed: f64,
}

/// Homogeneity of a pool of highlight texts. Tokens are pooled over all
/// texts without deduplicating repeated highlights.
pub fn homogeneity_of_pool<'a, I>(
    entity: &str,
    texts: I,
    params: SigmoidParams,
) -> Result<HomogeneityScore>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut total = 0usize;
    let mut unique: HashSet<String> = HashSet::new();
    let mut any = false;
    for text in texts {
        any = true;
        for tok in token_strings(text) {
            total += 1;
            unique.insert(tok);
        }
    }
    if !any {
        return Err(Error::NoHighlights(entity.to_owned()));
    }
    if total == 0 {
        return Err(Error::EmptyPool(entity.to_owned()));
    }
    let ratio = (total - unique.len()) as f64 / total as f64;
    Ok(HomogeneityScore {
        entity: entity.to_owned(),
        total_tokens: total,
        unique_tokens: unique.len(),
        ratio,
        steepness: params.steepness,
        center: params.center,
        transformed: params.apply(ratio),
    })
}

pub fn homogeneity(
    store: &HighlightStore,
    entity: &str,
    params: SigmoidParams,
) -> Result<HomogeneityScore> {
    homogeneity_of_pool(
        entity,
        store.for_entity(entity).map(|h| h.surface.as_str()),
        params,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub mtf: f64,
    pub midf: f64,
    pub score: f64,
    /// Occurrences of the term in the entity's highlights.
    pub frequency: usize,
}

/// Term occurrence counts per entity, over highlight text only.
#[derive(Debug, Clone, Default)]
pub struct TermTable {
    per_entity: BTreeMap<String, HashMap<String, usize>>,
}

impl TermTable {
    pub fn build(store: &HighlightStore) -> Self {
        let mut per_entity: BTreeMap<String, HashMap<String, usize>> = BTreeMap::new();
        for h in store.spans() {
            let counts = per_entity.entry(h.entity.clone()).or_default();
            for tok in token_strings(&h.surface) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        Self { per_entity }
    }

    /// Every candidate term of `entity`, scored and ranked.
    pub fn ranked(&self, entity: &str) -> Result<Vec<TermScore>> {
        let counts = self
            .per_entity
            .get(entity)
            .ok_or_else(|| Error::NoHighlights(entity.to_owned()))?;
        let n_entities = self.per_entity.len() as f64;
        let total: usize = counts.values().sum();
        let mut scores: Vec<TermScore> = counts
            .iter()
            .map(|(term, &f)| {
                let containing = self
                    .per_entity
                    .values()
                    .filter(|c| c.contains_key(term))
                    .count();
                let mtf = f as f64 / total as f64;
                let midf = (n_entities / containing as f64).ln();
                TermScore {
                    term: term.clone(),
                    mtf,
                    midf,
                    score: mtf * midf,
                    frequency: f,
                }
            })
            .collect();
        scores.sort_by(rank_order);
        Ok(scores)
    }
}

/// Higher score first, then higher frequency, then the term itself.
pub fn rank_order(a: &TermScore, b: &TermScore) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.frequency.cmp(&a.frequency))
        .then_with(|| a.term.cmp(&b.term))
}

/// The `top_k` recommended terms of `entity`, skipping `discarded` ones so
/// that discarding a term surfaces the next one in the ranking.
pub fn frequent_terms(
    store: &HighlightStore,
    entity: &str,
    discarded: &HashSet<String>,
    top_k: usize,
) -> Result<Vec<TermScore>> {
    Ok(TermTable::build(store)
        .ranked(entity)?
        .into_iter()
        .filter(|t| !discarded.contains(&t.term))
        .take(top_k)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramCount {
    pub tokens: Vec<String>,
    pub frequency: usize,
}

impl NgramCount {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Contiguous n-grams (2 ≤ n ≤ `max_n`) containing `seed`, counted across the
/// entity's highlights. N-grams never span two highlights.
pub fn ngram_expansions(
    store: &HighlightStore,
    entity: &str,
    seed: &str,
    top_m: usize,
    max_n: usize,
) -> Result<Vec<NgramCount>> {
    let seed = normalize(seed);
    let mut seen_highlight = false;
    let mut seed_found = false;
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for h in store.for_entity(entity) {
        seen_highlight = true;
        let toks = token_strings(&h.surface);
        let hits: Vec<usize> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == seed)
            .map(|(i, _)| i)
            .collect();
        if hits.is_empty() {
            continue;
        }
        seed_found = true;
        for n in 2..=max_n.min(toks.len()) {
            for start in 0..=toks.len() - n {
                let window = start..start + n;
                if hits.iter().any(|i| window.contains(i)) {
                    *counts.entry(toks[window].to_vec()).or_default() += 1;
                }
            }
        }
    }
    if !seen_highlight {
        return Err(Error::NoHighlights(entity.to_owned()));
    }
    if !seed_found {
        return Err(Error::SeedAbsent {
            entity: entity.to_owned(),
            seed,
        });
    }
    let mut out: Vec<NgramCount> = counts
        .into_iter()
        .map(|(tokens, frequency)| NgramCount { tokens, frequency })
        .collect();
    out.sort_by(|a, b| {
        (Reverse(a.frequency), a.tokens.len(), &a.tokens).cmp(&(
            Reverse(b.frequency),
            b.tokens.len(),
            &b.tokens,
        ))
    });
    out.truncate(top_m);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcordanceOptions {
    /// Whole tokens of context on each side.
    pub window_tokens: usize,
    /// Also require the match to end at a token boundary.
    pub whole_word: bool,
}

impl Default for ConcordanceOptions {
    fn default() -> Self {
        Self {
            window_tokens: 8,
            whole_word: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcordanceRow {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub before: String,
    pub word: String,
    pub after: String,
    pub entity_label: String,
}

/// Every occurrence of `query` starting at a token boundary, with context
/// and the entity of the first overlapping highlight.
pub fn concordance(
    corpus: &Corpus,
    store: &HighlightStore,
    query: &str,
    options: ConcordanceOptions,
) -> Result<Vec<ConcordanceRow>> {
    let needle = normalize(query);
    if needle.trim().is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut rows = Vec::new();
    for doc in corpus.documents() {
        for (start, end) in doc.find_at_boundaries(&needle) {
            if options.whole_word && !doc.is_boundary(end) {
                continue;
            }
            let (before, _) = token_window(doc, start, options.window_tokens, 0)?;
            let (_, after) = token_window(doc, end, 0, options.window_tokens)?;
            let entity_label = store
                .overlapping(doc.doc_id(), start, end)
                .next()
                .map_or_else(|| NOT_ANNOTATED.to_owned(), |h| h.entity.clone());
            rows.push(ConcordanceRow {
                doc_id: doc.doc_id().to_owned(),
                start,
                end,
                before,
                word: doc.slice(start, end).unwrap_or_default().to_owned(),
                after,
                entity_label,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{HighlightSpan, Origin};

    fn pool_store(pools: &[(&str, &[&str])]) -> HighlightStore {
        let mut spans = Vec::new();
        for (entity, texts) in pools {
            for (i, t) in texts.iter().enumerate() {
                spans.push(HighlightSpan {
                    doc_id: format!("{entity}-{i}"),
                    entity: (*entity).to_owned(),
                    start: 0,
                    end: t.chars().count(),
                    surface: (*t).to_owned(),
                    origin: Origin::Expert,
                });
            }
        }
        HighlightStore::new(spans)
    }

    #[test]
    fn all_unique_pool() {
        let s = homogeneity_of_pool("e", ["a b c", "d e"], SigmoidParams::default()).unwrap();
        assert_eq!((s.total_tokens, s.unique_tokens), (5, 5));
        assert_eq!(s.ratio, 0.0);
        assert!((s.transformed - 1.0 / (1.0 + 5f64.exp())).abs() < 1e-15);
        assert!((s.transformed - 0.0067).abs() < 5e-5);
    }

    #[test]
    fn single_repeated_token() {
        let s =
            homogeneity_of_pool("e", ["x x x x x x x x x x"], SigmoidParams::default()).unwrap();
        assert_eq!((s.total_tokens, s.unique_tokens), (10, 1));
        assert!((s.ratio - 0.9).abs() < 1e-15);
        assert!((s.transformed - 0.982).abs() < 5e-4);
    }

    #[test]
    fn midpoint_is_exactly_half() {
        let texts: Vec<String> = (0..50).map(|i| format!("w{i} w{i}")).collect();
        let s = homogeneity_of_pool(
            "e",
            texts.iter().map(String::as_str),
            SigmoidParams::default(),
        )
        .unwrap();
        assert_eq!((s.total_tokens, s.unique_tokens), (100, 50));
        assert_eq!(s.ratio, 0.5);
        assert_eq!(s.transformed, 0.5);
    }

    #[test]
    fn homogeneity_errors() {
        let none: [&str; 0] = [];
        assert!(matches!(
            homogeneity_of_pool("e", none, SigmoidParams::default()),
            Err(Error::NoHighlights(_))
        ));
        assert!(matches!(
            homogeneity_of_pool("e", ["..."], SigmoidParams::default()),
            Err(Error::EmptyPool(_))
        ));
    }

    #[test]
    fn toy_tfidf() {
        let store = pool_store(&[("a", &["alpha alpha beta"]), ("b", &["beta"])]);
        let terms = frequent_terms(&store, "a", &HashSet::new(), 10).unwrap();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].term, "alpha");
        assert!((terms[0].mtf - 2.0 / 3.0).abs() < 1e-15);
        assert!((terms[0].midf - 2f64.ln()).abs() < 1e-15);
        assert!((terms[0].score - 0.462).abs() < 5e-4);
        assert_eq!(terms[1].term, "beta");
        assert_eq!(terms[1].midf, 0.0);
        assert_eq!(terms[1].score, 0.0);
    }

    #[test]
    fn discard_skips_term() {
        let store = pool_store(&[("a", &["alpha alpha beta"]), ("b", &["beta"])]);
        let discarded: HashSet<String> = ["alpha".to_owned()].into();
        let terms = frequent_terms(&store, "a", &discarded, 10).unwrap();
        assert_eq!(
            terms.iter().map(|t| t.term.as_str()).collect::<Vec<_>>(),
            ["beta"]
        );
        assert!(matches!(
            frequent_terms(&store, "zzz", &HashSet::new(), 10),
            Err(Error::NoHighlights(_))
        ));
    }

    #[test]
    fn ngrams_of_repeated_highlight() {
        let store = pool_store(&[("e", &["large cell carcinoma", "large cell carcinoma"])]);
        let ng = ngram_expansions(&store, "e", "cell", 5, 3).unwrap();
        let got: Vec<_> = ng.iter().map(|n| (n.text(), n.frequency)).collect();
        assert_eq!(
            got,
            [
                ("cell carcinoma".to_owned(), 2),
                ("large cell".to_owned(), 2),
                ("large cell carcinoma".to_owned(), 2)
            ]
        );
    }

    #[test]
    fn ngrams_do_not_cross_highlights() {
        let store = pool_store(&[("e", &["a b", "c d"])]);
        let ng = ngram_expansions(&store, "e", "b", 5, 4).unwrap();
        assert_eq!(ng.len(), 1);
        assert_eq!(ng[0].tokens, ["a", "b"]);
        assert!(matches!(
            ngram_expansions(&store, "e", "zz", 5, 4),
            Err(Error::SeedAbsent { .. })
        ));
    }

    #[test]
    fn concordance_prefix_rule_and_labels() {
        let corpus = Corpus::from_texts([
            (
                "a.txt",
                "le cas a été présenté au comité des tumeurs thoraciques",
            ),
            ("b.txt", "pour palpation d'une tumeur aux deux seins"),
        ]);
        let store = HighlightStore::new(vec![HighlightSpan {
            doc_id: "b.txt".into(),
            entity: "Signes physiques".into(),
            start: 5,
            end: 27,
            surface: "palpation d'une tumeur".into(),
            origin: Origin::Expert,
        }]);
        let rows = concordance(&corpus, &store, "Tumeur", ConcordanceOptions::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].doc_id, "a.txt");
        assert_eq!(rows[0].word, "tumeur");
        assert_eq!(rows[0].after, "s thoraciques");
        assert_eq!(rows[0].entity_label, NOT_ANNOTATED);
        assert_eq!(rows[1].entity_label, "Signes physiques");
        assert_eq!(rows[1].before, "pour palpation d'une ");

        let whole = ConcordanceOptions {
            whole_word: true,
            ..Default::default()
        };
        assert_eq!(
            concordance(&corpus, &store, "tumeur", whole).unwrap().len(),
            1
        );
        assert!(concordance(&corpus, &store, "zzzz", Default::default())
            .unwrap()
            .is_empty());
        assert!(matches!(
            concordance(&corpus, &store, "  ", Default::default()),
            Err(Error::EmptyQuery)
        ));
    }
}
