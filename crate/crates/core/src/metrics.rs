//! Precision/recall tables per category and per entity, the correction
//! ledger, and the category recall distribution.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{HighlightSpan, HighlightStore, Origin};
use crate::error::{Error, Result};
use crate::matcher::{CategoryPattern, Classification, MatchRecord};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

pub const CI_METHOD: &str = "wilson-score-95";

/// Rounds to two decimals for display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// `successes / trials`, `None` when there are no trials.
pub fn ratio(successes: usize, trials: usize) -> Option<f64> {
    (trials > 0).then(|| successes as f64 / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> Option<Interval> {
    if trials == 0 {
        return None;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the bounds touch 0 and 1 exactly at the extremes; keep rounding off them
    Some(Interval {
        low: if successes == 0 {
            0.0
        } else {
            (center - half).clamp(0.0, 1.0)
        },
        high: if successes == trials {
            1.0
        } else {
            (center + half).clamp(0.0, 1.0)
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    /// Not defined per category; always 0 there.
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `None` when the category has no matches.
    pub precision: Option<f64>,
}

impl Counts {
    fn new(tp: usize, fp: usize) -> Self {
        Self {
            tp,
            fp,
            fn_: 0,
            precision: ratio(tp, tp + fp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category_id: String,
    pub label: String,
    /// Against the expert highlights only.
    pub raw: Counts,
    /// With converted false positives counted as true positives.
    pub corrected: Counts,
}

pub fn category_metrics(
    categories: &[CategoryPattern],
    matches: &[MatchRecord],
) -> Vec<CategoryMetrics> {
    categories
        .iter()
        .map(|c| {
            let (mut tp, mut fp, mut conv) = (0, 0, 0);
            for m in matches.iter().filter(|m| m.category_id == c.category_id) {
                match m.classification {
                    Classification::Tp => tp += 1,
                    Classification::Fp => fp += 1,
                    Classification::TpCorr => conv += 1,
                }
            }
            CategoryMetrics {
                category_id: c.category_id.clone(),
                label: c.label.clone(),
                raw: Counts::new(tp, fp + conv),
                corrected: Counts::new(tp + conv, fp),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMetrics {
    pub entity: String,
    pub homogeneity: f64,
    /// Gold highlights, correction-added ones included.
    pub highlights: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: f64,
    pub precision_ci: Option<Interval>,
    pub recall_ci: Option<Interval>,
    pub ci_method: String,
}

/// Gold highlights of `entity` overlapped by at least one of `matches`.
pub fn caught_highlights<'a>(
    gold: &'a HighlightStore,
    entity: &str,
    matches: &[MatchRecord],
) -> Vec<&'a HighlightSpan> {
    gold.for_entity(entity)
        .filter(|h| {
            matches.iter().any(|m| {
                m.classification.is_positive() && m.doc_id == h.doc_id && h.overlaps(m.start, m.end)
            })
        })
        .collect()
}

/// Entity totals. TP and FP sum the per-category corrected counts; FN counts
/// gold highlights that no positive match overlaps.
pub fn entity_metrics(
    gold: &HighlightStore,
    entity: &str,
    homogeneity: f64,
    matches: &[MatchRecord],
) -> Result<EntityMetrics> {
    let highlights = gold.count(entity);
    if highlights == 0 {
        return Err(Error::NoHighlights(entity.to_owned()));
    }
    let tp = matches
        .iter()
        .filter(|m| m.classification.is_positive())
        .count();
    let fp = matches.len() - tp;
    let fn_ = highlights - caught_highlights(gold, entity, matches).len();
    Ok(EntityMetrics {
        entity: entity.to_owned(),
        homogeneity,
        highlights,
        tp,
        fp,
        fn_,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_).unwrap_or(0.0),
        precision_ci: wilson_interval(tp, tp + fp, Z_95),
        recall_ci: wilson_interval(tp, tp + fn_, Z_95),
        ci_method: CI_METHOD.to_owned(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub match_id: String,
    pub converted_at: DateTime<Utc>,
    /// Gold highlight added for the converted match.
    pub highlight: HighlightSpan,
}

/// FP→TP conversions, in the order they were made.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectionLedger {
    entries: Vec<Correction>,
}

impl CorrectionLedger {
    pub fn entries(&self) -> &[Correction] {
        &self.entries
    }

    pub fn contains(&self, match_id: &str) -> bool {
        self.entries.iter().any(|c| c.match_id == match_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records `record` as a missed highlight of `entity`.
    pub fn convert(
        &mut self,
        record: &MatchRecord,
        entity: &str,
        at: DateTime<Utc>,
    ) -> Result<&Correction> {
        if self.contains(&record.match_id) {
            return Err(Error::AlreadyConverted(record.match_id.clone()));
        }
        if record.classification != Classification::Fp {
            return Err(Error::NotFalsePositive(record.match_id.clone()));
        }
        self.entries.push(Correction {
            match_id: record.match_id.clone(),
            converted_at: at,
            highlight: HighlightSpan {
                doc_id: record.doc_id.clone(),
                entity: entity.to_owned(),
                start: record.start,
                end: record.end,
                surface: record.surface.clone(),
                origin: Origin::Correction,
            },
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn undo(&mut self, match_id: &str) -> Result<Correction> {
        let idx = self
            .entries
            .iter()
            .position(|c| c.match_id == match_id)
            .ok_or_else(|| Error::NotConverted(match_id.to_owned()))?;
        Ok(self.entries.remove(idx))
    }

    pub fn highlights(&self) -> impl Iterator<Item = &HighlightSpan> {
        self.entries.iter().map(|c| &c.highlight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSlice {
    pub category_id: String,
    pub label: String,
    pub highlights: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallDistribution {
    pub entity: String,
    pub total: usize,
    pub slices: Vec<RecallSlice>,
    pub uncategorized: usize,
    pub uncategorized_share: f64,
}

/// Attributes each gold highlight to the first category (in creation order)
/// with a positive match overlapping it; the rest are uncategorized.
pub fn recall_distribution(
    gold: &HighlightStore,
    entity: &str,
    categories: &[CategoryPattern],
    matches: &[MatchRecord],
) -> Result<RecallDistribution> {
    let total = gold.count(entity);
    if total == 0 {
        return Err(Error::NoHighlights(entity.to_owned()));
    }
    let mut per_category = vec![0usize; categories.len()];
    let mut uncategorized = 0;
    for h in gold.for_entity(entity) {
        let first = categories.iter().position(|c| {
            matches.iter().any(|m| {
                m.category_id == c.category_id
                    && m.classification.is_positive()
                    && m.doc_id == h.doc_id
                    && h.overlaps(m.start, m.end)
            })
        });
        match first {
            Some(i) => per_category[i] += 1,
            None => uncategorized += 1,
        }
    }
    let share = |n: usize| n as f64 / total as f64;
    Ok(RecallDistribution {
        entity: entity.to_owned(),
        total,
        slices: categories
            .iter()
            .zip(per_category)
            .map(|(c, n)| RecallSlice {
                category_id: c.category_id.clone(),
                label: c.label.clone(),
                highlights: n,
                share: share(n),
            })
            .collect(),
        uncategorized,
        uncategorized_share: share(uncategorized),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_hand_computation() {
        // reference values from statsmodels proportion_confint(method="wilson")
        let ci = wilson_interval(57, 71, Z_95).unwrap();
        assert!((ci.low - 0.695_803_183).abs() < 1e-8, "{ci:?}");
        assert!((ci.high - 0.878_744_677).abs() < 1e-8, "{ci:?}");
        let ci = wilson_interval(57, 95, Z_95).unwrap();
        assert!((ci.low - 0.499_456_029).abs() < 1e-8, "{ci:?}");
        assert!((ci.high - 0.692_771_001).abs() < 1e-8, "{ci:?}");
    }

    #[test]
    fn wilson_edges() {
        assert!(wilson_interval(0, 0, Z_95).is_none());
        let all = wilson_interval(10, 10, Z_95).unwrap();
        assert_eq!(all.high, 1.0);
        assert!(all.low < 1.0);
        let none = wilson_interval(0, 10, Z_95).unwrap();
        assert_eq!(none.low, 0.0);
    }

    #[test]
    fn rounding() {
        assert_eq!(round2(22.0 / 33.0), 0.67);
        assert_eq!(round2(1.0 / 9.0), 0.11);
        assert_eq!(round2(7.0 / 11.0), 0.64);
        assert_eq!(round2(26.0 / 33.0), 0.79);
    }

    fn record(id: &str, class: Classification) -> MatchRecord {
        MatchRecord {
            match_id: id.into(),
            doc_id: "d".into(),
            start: 0,
            end: 3,
            surface: "abc".into(),
            category_id: "c".into(),
            expression_index: 0,
            classification: class,
            matched_highlight: None,
        }
    }

    #[test]
    fn ledger_rules() {
        let mut ledger = CorrectionLedger::default();
        let at = DateTime::<Utc>::from_timestamp(0, 0).unwrap();
        assert!(matches!(
            ledger.convert(&record("t", Classification::Tp), "e", at),
            Err(Error::NotFalsePositive(_))
        ));
        let c = ledger
            .convert(&record("f", Classification::Fp), "e", at)
            .unwrap();
        assert_eq!(c.highlight.origin, Origin::Correction);
        assert_eq!((c.highlight.start, c.highlight.end), (0, 3));
        assert!(matches!(
            ledger.convert(&record("f", Classification::Fp), "e", at),
            Err(Error::AlreadyConverted(_))
        ));
        assert!(matches!(ledger.undo("zz"), Err(Error::NotConverted(_))));
        ledger.undo("f").unwrap();
        assert!(ledger.is_empty());
    }

    #[test]
    fn empty_category_has_undefined_precision() {
        let cat =
            CategoryPattern::from_def("e", &crate::matcher::CategoryDef::with_terms("c", &["x"]))
                .unwrap();
        let rows = category_metrics(&[cat], &[]);
        assert_eq!(rows[0].raw.precision, None);
        assert_eq!(rows[0].corrected.tp, 0);
    }
}
