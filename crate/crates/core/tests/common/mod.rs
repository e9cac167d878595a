//! Brute-force reference implementations used as oracles. They work on
//! char vectors position by position and share no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

pub fn chars(text: &str) -> Vec<char> {
    text.chars().collect()
}

fn word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// A position splits a token only when both neighbours are word chars.
pub fn boundary(text: &[char], pos: usize) -> bool {
    pos == 0 || pos >= text.len() || !(word_char(text[pos - 1]) && word_char(text[pos]))
}

pub fn starts_at(text: &[char], pos: usize, needle: &[char]) -> bool {
    pos + needle.len() <= text.len() && text[pos..pos + needle.len()] == *needle
}

/// Occurrences of `needle` that begin at a boundary, by scanning every
/// position.
pub fn find(text: &[char], needle: &str) -> Vec<(usize, usize)> {
    let n = chars(needle);
    if n.is_empty() {
        return Vec::new();
    }
    (0..text.len())
        .filter(|&i| boundary(text, i) && starts_at(text, i, &n))
        .map(|i| (i, i + n.len()))
        .collect()
}

/// Two-segment gap match: for each anchor, the nearest second segment
/// starting within `gap` characters after the anchor ends.
pub fn find_gapped(text: &[char], first: &str, second: &str, gap: usize) -> Vec<(usize, usize)> {
    let b = chars(second);
    find(text, first)
        .into_iter()
        .filter_map(|(s, e)| {
            (e..=e + gap)
                .find(|&j| boundary(text, j) && starts_at(text, j, &b))
                .map(|j| (s, j + b.len()))
        })
        .collect()
}

/// Token spans by scanning for maximal runs of word chars.
pub fn tokens(text: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        if word_char(text[i]) {
            let s = i;
            while i < text.len() && word_char(text[i]) {
                i += 1;
            }
            out.push((s, i));
        } else {
            i += 1;
        }
    }
    out
}

pub fn slice(text: &[char], s: usize, e: usize) -> String {
    text[s..e].iter().collect()
}

/// (before, after) context: `n` tokens ending after / starting before
/// `center`, cut at `center`.
pub fn window(text: &[char], center: usize, before: usize, after: usize) -> (String, String) {
    let toks = tokens(text);
    let left: Vec<_> = toks.iter().filter(|t| t.0 < center).collect();
    let b = match left.len().checked_sub(before) {
        _ if before == 0 || left.is_empty() => String::new(),
        Some(skip) => slice(text, left[skip].0, center),
        None => slice(text, left[0].0, center),
    };
    let right: Vec<_> = toks.iter().filter(|t| t.1 > center).take(after).collect();
    let a = match right.last() {
        Some(last) => slice(text, center, last.1),
        None => String::new(),
    };
    (b, a)
}

/// Raw span set of a category made of literal terms and one optional
/// two-segment gap expression, with ban words applied.
pub fn category_raw(
    text: &[char],
    terms: &[String],
    gapped: Option<(&str, &str, usize)>,
    bans: &[String],
    ban_context: usize,
) -> BTreeSet<(usize, usize)> {
    let mut spans: BTreeSet<(usize, usize)> = terms.iter().flat_map(|t| find(text, t)).collect();
    if let Some((a, b, g)) = gapped {
        spans.extend(find_gapped(text, a, b, g));
    }
    let banned: Vec<(usize, usize)> = bans.iter().flat_map(|b| find(text, b)).collect();
    spans
        .into_iter()
        .filter(|&(s, e)| {
            let lo = s.saturating_sub(ban_context);
            let hi = e + ban_context;
            !banned.iter().any(|&(bs, be)| bs < hi && lo < be)
        })
        .collect()
}

/// Keeps the earliest-starting, longest span of each overlapping run.
pub fn merge(raw: &BTreeSet<(usize, usize)>) -> Vec<(usize, usize)> {
    let mut sorted: Vec<_> = raw.iter().copied().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for m in sorted {
        if kept.last().is_none_or(|k| m.0 >= k.1) {
            kept.push(m);
        }
    }
    kept
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedTerm {
    pub term: String,
    pub score: f64,
    pub frequency: usize,
}

/// Term ranking for `entity` computed straight from the definition:
/// relative frequency in the entity times ln(entities / entities using it).
pub fn rank_terms(pools: &BTreeMap<String, Vec<String>>, entity: &str) -> Vec<RankedTerm> {
    let words = |texts: &Vec<String>| -> Vec<String> {
        texts
            .iter()
            .flat_map(|t| {
                let c = chars(t);
                tokens(&c).into_iter().map(move |(s, e)| slice(&c, s, e))
            })
            .collect()
    };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for w in words(&pools[entity]) {
        *counts.entry(w).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    let vocab: Vec<BTreeSet<String>> = pools
        .values()
        .map(|p| words(p).into_iter().collect())
        .collect();
    let n_entities = pools.len() as f64;
    let mut out: Vec<RankedTerm> = counts
        .into_iter()
        .map(|(term, f)| {
            let with = vocab.iter().filter(|v| v.contains(&term)).count() as f64;
            RankedTerm {
                score: (f as f64 / total as f64) * (n_entities / with).ln(),
                term,
                frequency: f,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.frequency.cmp(&a.frequency))
            .then(a.term.cmp(&b.term))
    });
    out
}
