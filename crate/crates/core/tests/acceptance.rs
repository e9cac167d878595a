//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances are the constants below.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use rulefit_core::analytics::{self, ConcordanceOptions, SigmoidParams, NOT_ANNOTATED};
use rulefit_core::corpus::{Corpus, Document, HighlightSpan, HighlightStore, Origin};
use rulefit_core::decision::{
    evaluate_checklist, ChecklistInputs, ChecklistThresholds, Status, Verdict,
};
use rulefit_core::matcher::{
    CategoryDef, CategoryPattern, CompiledCategory, GapExpressionDef, MatchConfig,
};
use rulefit_core::metrics::{round2, wilson_interval, Z_95};
use rulefit_core::session::{ProjectSession, Workbench};
use rulefit_fixtures::{entity, Fixture};

const CATEGORY_TABLE_RUNTIME: Duration = Duration::from_secs(1);
const HOMOGENEITY_RUNTIME: Duration = Duration::from_secs(5);
const CI_TOLERANCE: f64 = 0.03;
const UNCATEGORIZED_TOLERANCE: f64 = 0.001;
const SCORE_TOLERANCE: f64 = 1e-12;
const HOMOGENEITY_POOLS: u32 = 1000;
const TFIDF_RANDOM_CASES: u32 = 500;
const MATCHER_CASES: u32 = 300;

// Metastatic-stage categories in creation order: (TP, FP, precision).
const CATEGORY_RAW: [(usize, usize, f64); 6] = [
    (22, 11, 0.67),
    (9, 2, 0.82),
    (3, 1, 0.75),
    (3, 0, 1.00),
    (1, 8, 0.11),
    (7, 4, 0.64),
];
const CATEGORY_CORRECTED: [(usize, usize, f64); 6] = [
    (26, 7, 0.79),
    (9, 2, 0.82),
    (4, 0, 1.00),
    (3, 0, 1.00),
    (6, 3, 0.67),
    (9, 2, 0.82),
];
const ENTITY_PRECISION_CI: (f64, f64) = (0.69, 0.9);
const ENTITY_RECALL_CI: (f64, f64) = (0.49, 0.71);

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixed_time() -> DateTime<Utc> {
    DateTime::from_timestamp(1_700_000_000, 0).expect("valid timestamp")
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn apply_missed_corrections(fx: &Fixture, wb: &mut Workbench) -> Result<usize, String> {
    let matches = wb.matches(entity::METASTATIC).map_err(|e| e.to_string())?;
    let ids = fx.missed_match_ids(&matches, entity::METASTATIC);
    for id in &ids {
        wb.apply_correction_at(id, fixed_time())
            .map_err(|e| e.to_string())?;
    }
    Ok(ids.len())
}

fn category_precision_tables() -> Outcome {
    let fx = Fixture::build();
    let started = Instant::now();
    let mut wb = fx.workbench();
    let before = wb
        .category_metrics(entity::METASTATIC)
        .map_err(|e| e.to_string())?;
    let converted = apply_missed_corrections(&fx, &mut wb)?;
    let after = wb
        .category_metrics(entity::METASTATIC)
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();

    check(converted == 12, || {
        format!("expected 12 conversions, made {converted}")
    })?;
    check(before.len() == 6 && after.len() == 6, || {
        "expected 6 categories".into()
    })?;
    for (i, (raw, corr)) in CATEGORY_RAW.iter().zip(CATEGORY_CORRECTED).enumerate() {
        let got = &before[i].raw;
        check((got.tp, got.fp) == (raw.0, raw.1), || {
            format!("{} raw counts {:?}", before[i].category_id, got)
        })?;
        let p = got.precision.ok_or("raw precision undefined")?;
        check(round2(p) == raw.2, || {
            format!(
                "{} raw precision {p:.4} != {}",
                before[i].category_id, raw.2
            )
        })?;
        // the raw view stays put after corrections
        check(after[i].raw == *got, || {
            format!("{} raw view moved after corrections", after[i].category_id)
        })?;
        let got = &after[i].corrected;
        check((got.tp, got.fp) == (corr.0, corr.1), || {
            format!("{} corrected counts {:?}", after[i].category_id, got)
        })?;
        let p = got.precision.ok_or("corrected precision undefined")?;
        check(round2(p) == corr.2, || {
            format!(
                "{} corrected precision {p:.4} != {}",
                after[i].category_id, corr.2
            )
        })?;
        check(got.fn_ == 0, || "category FN must be 0".into())?;
    }
    check(elapsed < CATEGORY_TABLE_RUNTIME, || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "6 categories, 12 conversions, {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn entity_metrics_with_intervals() -> Outcome {
    let fx = Fixture::build();
    let mut wb = fx.workbench();
    apply_missed_corrections(&fx, &mut wb)?;
    let m = wb
        .entity_metrics(entity::METASTATIC)
        .map_err(|e| e.to_string())?;
    check((m.tp, m.fp, m.fn_) == (57, 14, 38), || {
        format!("counts {}/{}/{}", m.tp, m.fp, m.fn_)
    })?;
    let precision = m.precision.ok_or("precision undefined")?;
    check(round2(precision) == 0.80, || {
        format!("precision {precision}")
    })?;
    check(round2(m.recall) == 0.60, || format!("recall {}", m.recall))?;
    let pci = m.precision_ci.ok_or("no precision interval")?;
    let rci = m.recall_ci.ok_or("no recall interval")?;
    for (name, got, want) in [
        ("precision", (pci.low, pci.high), ENTITY_PRECISION_CI),
        ("recall", (rci.low, rci.high), ENTITY_RECALL_CI),
    ] {
        check(
            (got.0 - want.0).abs() <= CI_TOLERANCE && (got.1 - want.1).abs() <= CI_TOLERANCE,
            || format!("{name} interval [{:.3}, {:.3}] vs {want:?}", got.0, got.1),
        )?;
    }
    // same interval straight from the counts
    let direct = wilson_interval(57, 71, Z_95).ok_or("no interval")?;
    check(direct == pci, || {
        "interval differs from the direct computation".into()
    })?;
    Ok(format!(
        "TP 57 FP 14 FN 38, precision {:.2} [{:.3}, {:.3}], recall {:.2} [{:.3}, {:.3}]",
        precision, pci.low, pci.high, m.recall, rci.low, rci.high
    ))
}

fn correction_pass_precision() -> Outcome {
    let fx = Fixture::build();
    let mut wb = fx.workbench();
    let before = wb
        .entity_metrics(entity::METASTATIC)
        .map_err(|e| e.to_string())?;
    apply_missed_corrections(&fx, &mut wb)?;
    let after = wb
        .entity_metrics(entity::METASTATIC)
        .map_err(|e| e.to_string())?;
    let (b, a) = (
        before.precision.ok_or("undefined")?,
        after.precision.ok_or("undefined")?,
    );
    check(round2(b) == 0.63, || format!("before {b}"))?;
    check(round2(a) == 0.80, || format!("after {a}"))?;
    Ok(format!("{:.2} -> {:.2}", b, a))
}

fn feasibility_verdicts() -> Outcome {
    // Yes / No / - per TH, LH, ER, EP as rated by the senior reviewer
    const SENIOR: [(&str, [&str; 4]); 12] = [
        ("Tumor Histology", ["Yes", "Yes", "Yes", "Yes"]),
        ("Specific Cancer Treatment", ["Yes", "Yes", "Yes", "Yes"]),
        ("Physical Signs", ["Yes", "Yes", "No", "-"]),
        ("Cancer-Related Progression", ["No", "-", "-", "-"]),
        ("Chemotherapy Response", ["Yes", "Yes", "Yes", "Yes"]),
        (
            "Metastatic Stage and Localizations",
            ["Yes", "Yes", "No", "-"],
        ),
        ("Smoking Status", ["Yes", "Yes", "Yes", "Yes"]),
        (
            "Significant Geriatric and Medical History",
            ["Yes", "No", "-", "-"],
        ),
        ("WHO ECOG Karnofsky Score", ["Yes", "Yes", "Yes", "Yes"]),
        ("Therapeutic Biomarkers", ["Yes", "Yes", "No", "Yes"]),
        ("Primary Tumor Topography", ["Yes", "Yes", "No", "-"]),
        ("Symptoms", ["Yes", "Yes", "No", "-"]),
    ];
    let seq = ChecklistThresholds::default();
    let nonseq = ChecklistThresholds {
        sequential: false,
        ..seq
    };
    // a "Yes" sits on the threshold, a "No" just below it, a "-" is fed as
    // a failing value so only the sequential rule can hide it
    let value = |cell: &str, threshold: f64, step: f64| {
        if cell == "Yes" {
            threshold
        } else {
            threshold - step
        }
    };
    let (mut feasible, mut not_feasible) = (0, 0);
    let mut anomalies = Vec::new();
    for (name, cells) in SENIOR {
        let inputs = ChecklistInputs {
            highlights: value(cells[0], seq.th_min as f64, 1.0) as usize,
            homogeneity: value(cells[1], seq.lh_min, 0.01),
            has_categories: true,
            recall: Some(value(cells[2], seq.er_min, 0.01)),
            precision: Some(value(cells[3], seq.ep_min, 0.01)),
        };
        let r = evaluate_checklist(name, &inputs, &seq);
        let got: Vec<&str> = r.criteria.iter().map(|c| c.status.cell()).collect();
        match r.verdict {
            Verdict::RulesFeasible => feasible += 1,
            Verdict::RulesNotFeasible => not_feasible += 1,
            Verdict::Incomplete => return Err(format!("{name}: incomplete")),
        }
        let all_yes = cells.iter().all(|c| *c == "Yes");
        check(all_yes == (r.verdict == Verdict::RulesFeasible), || {
            format!("{name}: verdict {:?}", r.verdict)
        })?;
        if got != cells {
            // ER failed yet EP was rated: only the non-sequential reading fits
            let r2 = evaluate_checklist(name, &inputs, &nonseq);
            let got2: Vec<&str> = r2.criteria.iter().map(|c| c.status.cell()).collect();
            check(got2 == cells, || {
                format!("{name}: {got:?} / {got2:?} vs {cells:?}")
            })?;
            check(r2.verdict == r.verdict, || {
                format!("{name}: verdict depends on mode")
            })?;
            check(
                r.status(rulefit_core::Criterion::EP) == Status::NotEvaluated,
                || name.to_string(),
            )?;
            anomalies.push(name);
        }
    }
    check((feasible, not_feasible) == (5, 7), || {
        format!("{feasible} feasible, {not_feasible} not")
    })?;
    check(anomalies == ["Therapeutic Biomarkers"], || {
        format!("rows needing non-sequential mode: {anomalies:?}")
    })?;
    Ok("5 feasible, 7 not feasible; Therapeutic Biomarkers matches with sequential=false".into())
}

fn homogeneity_properties() -> Outcome {
    let params = SigmoidParams::default();
    check(params.apply(0.5) == 0.5, || {
        "sigmoid at the center is not exactly 0.5".into()
    })?;
    let started = Instant::now();
    let word = "[a-zé]{1,6}";
    let pools = prop::collection::vec(prop::collection::vec(word, 1..12), 1..8);
    let strategy = (pools.clone(), pools, 1usize..60, "[a-z]{1,5}");
    let mut run = runner(HOMOGENEITY_POOLS);
    let result = run.run(&strategy, |(pool_a, pool_b, repeat, single)| {
        let score = |pool: &Vec<Vec<String>>| {
            let texts: Vec<String> = pool.iter().map(|ws| ws.join(" ")).collect();
            analytics::homogeneity_of_pool("e", texts.iter().map(String::as_str), params).unwrap()
        };
        // oracle over the word lists directly
        let oracle = |pool: &Vec<Vec<String>>| {
            let all: Vec<&String> = pool.iter().flatten().collect();
            let unique: HashSet<&String> = all.iter().copied().collect();
            (all.len() - unique.len()) as f64 / all.len() as f64
        };
        let (a, b) = (score(&pool_a), score(&pool_b));
        prop_assert!((a.ratio - oracle(&pool_a)).abs() < 1e-12);
        prop_assert!((b.ratio - oracle(&pool_b)).abs() < 1e-12);
        prop_assert!((0.0..1.0).contains(&a.ratio));
        if a.ratio < b.ratio {
            prop_assert!(a.transformed < b.transformed);
        } else if a.ratio == b.ratio {
            prop_assert_eq!(a.transformed, b.transformed);
        }

        let distinct: Vec<String> = (0..repeat).map(|i| format!("w{i}")).collect();
        let s = analytics::homogeneity_of_pool("u", [distinct.join(" ").as_str()], params).unwrap();
        prop_assert_eq!(s.ratio, 0.0);

        let same = vec![single.as_str(); repeat].join(" ");
        let s = analytics::homogeneity_of_pool("s", [same.as_str()], params).unwrap();
        prop_assert!((s.ratio - (repeat as f64 - 1.0) / repeat as f64).abs() < 1e-12);
        Ok(())
    });
    let elapsed = started.elapsed();
    result.map_err(|e| e.to_string())?;
    check(elapsed < HOMOGENEITY_RUNTIME, || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{HOMOGENEITY_POOLS} pool pairs in {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn store_from_pools(pools: &BTreeMap<String, Vec<String>>) -> HighlightStore {
    let mut spans = Vec::new();
    for (e, texts) in pools {
        for (i, t) in texts.iter().enumerate() {
            spans.push(HighlightSpan {
                doc_id: format!("{e}-{i}"),
                entity: e.clone(),
                start: 0,
                end: t.chars().count(),
                surface: t.clone(),
                origin: Origin::Expert,
            });
        }
    }
    HighlightStore::new(spans)
}

fn compare_rankings(pools: &BTreeMap<String, Vec<String>>) -> Result<(), String> {
    let store = store_from_pools(pools);
    for e in pools.keys() {
        let oracle = common::rank_terms(pools, e);
        let none = HashSet::new();
        let got =
            analytics::frequent_terms(&store, e, &none, usize::MAX).map_err(|x| x.to_string())?;
        check(got.len() == oracle.len(), || {
            format!("{e}: {} vs {} terms", got.len(), oracle.len())
        })?;
        for (g, o) in got.iter().zip(&oracle) {
            check(
                g.term == o.term
                    && g.frequency == o.frequency
                    && (g.score - o.score).abs() < SCORE_TOLERANCE,
                || format!("{e}: {:?} vs {:?} in {pools:?}", g, o),
            )?;
        }
        // discarding the leader surfaces the runner-up
        if let Some(top) = oracle.first() {
            let discard: HashSet<String> = [top.term.clone()].into();
            let next =
                analytics::frequent_terms(&store, e, &discard, 1).map_err(|x| x.to_string())?;
            let want: Vec<&str> = oracle
                .iter()
                .skip(1)
                .take(1)
                .map(|t| t.term.as_str())
                .collect();
            let got: Vec<&str> = next.iter().map(|t| t.term.as_str()).collect();
            check(got == want, || {
                format!(
                    "{e}: after discarding {} got {got:?}, want {want:?}",
                    top.term
                )
            })?;
        }
    }
    Ok(())
}

fn tfidf_oracle() -> Outcome {
    // every pair of single-highlight pools of 1 to 3 tokens over {a, b, c}
    let vocab = ["a", "b", "c"];
    let mut texts: Vec<String> = Vec::new();
    for len in 1..=3u32 {
        for code in 0..3usize.pow(len) {
            let mut c = code;
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let w = vocab[c % 3];
                    c /= 3;
                    w
                })
                .collect();
            texts.push(words.join(" "));
        }
    }
    let mut exhaustive = 0;
    for x in &texts {
        for y in &texts {
            let pools: BTreeMap<String, Vec<String>> = [
                ("e0".to_owned(), vec![x.clone()]),
                ("e1".to_owned(), vec![y.clone()]),
            ]
            .into();
            compare_rankings(&pools)?;
            exhaustive += 1;
        }
    }

    let word = prop::sample::select(vec![
        "tumeur", "sein", "côlon", "m1", "stade", "iv", "droit",
    ]);
    let highlight = prop::collection::vec(word, 1..4);
    let pool = prop::collection::vec(highlight, 1..4);
    let strategy = prop::collection::vec(pool, 1..=5);
    let mut run = runner(TFIDF_RANDOM_CASES);
    run.run(&strategy, |entities| {
        let pools: BTreeMap<String, Vec<String>> = entities
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("e{i}"), p.iter().map(|h| h.join(" ")).collect()))
            .collect();
        let total: usize = entities.iter().flatten().map(Vec::len).sum();
        prop_assume!(total <= 30);
        compare_rankings(&pools).map_err(TestCaseError::fail)
    })
    .map_err(|e| e.to_string())?;
    Ok(format!(
        "{exhaustive} exhaustive corpora, {TFIDF_RANDOM_CASES} random corpora"
    ))
}

fn text_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[abcé .\\-]{0,1200}", 1..=4)
}

fn needle_strategy() -> impl Strategy<Value = String> {
    "[abcé.\\-]( ?[abcé.\\-]){0,2}"
}

fn spans_of(raw: Vec<rulefit_core::matcher::RawMatch>) -> Vec<(usize, usize)> {
    raw.into_iter().map(|m| (m.start, m.end)).collect()
}

fn compile(def: CategoryDef, ctx: usize) -> CompiledCategory {
    let pattern = CategoryPattern::from_def("e", &def).unwrap();
    CompiledCategory::compile(
        &pattern,
        MatchConfig {
            ban_context_chars: ctx,
        },
    )
    .unwrap()
}

fn gap_def(first: &str, second: &str, gap: usize, bans: &[String]) -> CategoryDef {
    CategoryDef {
        id: "g".into(),
        gap_expressions: vec![GapExpressionDef {
            segments: vec![first.into(), second.into()],
            gaps: vec![gap],
        }],
        banwords: bans.to_vec(),
        ..CategoryDef::default()
    }
}

fn matcher_oracles() -> Outcome {
    // concordancer against a position-by-position scan
    let highlights = prop::collection::vec((0usize..1200, 1usize..40, 0usize..2), 0..6);
    let strategy = (
        text_strategy(),
        needle_strategy(),
        0usize..4,
        any::<bool>(),
        highlights,
    );
    runner(MATCHER_CASES)
        .run(&strategy, |(texts, query, window, whole_word, hl)| {
            let corpus = Corpus::from_texts(
                texts
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (format!("d{i}"), t.clone())),
            );
            let mut spans = Vec::new();
            for doc in corpus.documents() {
                let n = doc.char_len();
                for &(s, len, e) in &hl {
                    if s < n {
                        let end = (s + len).min(n);
                        spans.push(HighlightSpan {
                            doc_id: doc.doc_id().into(),
                            entity: format!("ent{e}"),
                            start: s,
                            end,
                            surface: doc.slice(s, end).unwrap().into(),
                            origin: Origin::Expert,
                        });
                    }
                }
            }
            let store = HighlightStore::new(spans.clone());
            let rows = analytics::concordance(
                &corpus,
                &store,
                &query,
                ConcordanceOptions {
                    window_tokens: window,
                    whole_word,
                },
            )
            .unwrap();
            let mut want = Vec::new();
            for (i, t) in texts.iter().enumerate() {
                let c = common::chars(t);
                for (s, e) in common::find(&c, &query) {
                    if whole_word && !common::boundary(&c, e) {
                        continue;
                    }
                    let (before, _) = common::window(&c, s, window, 0);
                    let (_, after) = common::window(&c, e, 0, window);
                    let id = format!("d{i}");
                    let label = spans
                        .iter()
                        .filter(|h| h.doc_id == id && h.start < e && s < h.end)
                        .min_by(|a, b| {
                            (a.start, a.end, &a.entity).cmp(&(b.start, b.end, &b.entity))
                        })
                        .map_or(NOT_ANNOTATED.to_owned(), |h| h.entity.clone());
                    want.push((id, s, e, before, common::slice(&c, s, e), after, label));
                }
            }
            let got: Vec<_> = rows
                .into_iter()
                .map(|r| {
                    (
                        r.doc_id,
                        r.start,
                        r.end,
                        r.before,
                        r.word,
                        r.after,
                        r.entity_label,
                    )
                })
                .collect();
            prop_assert_eq!(got, want);
            Ok(())
        })
        .map_err(|e| format!("concordance: {e}"))?;

    // category matchers against the scan
    let strategy = (
        text_strategy(),
        prop::collection::vec(needle_strategy(), 1..3),
        proptest::option::of((needle_strategy(), needle_strategy(), 0usize..12)),
        prop::collection::vec(needle_strategy(), 0..3),
        0usize..4,
    );
    runner(MATCHER_CASES)
        .run(&strategy, |(texts, terms, gapped, bans, ctx)| {
            let def = CategoryDef {
                id: "c".into(),
                terms: terms.clone(),
                gap_expressions: gapped
                    .iter()
                    .map(|(a, b, g)| GapExpressionDef {
                        segments: vec![a.clone(), b.clone()],
                        gaps: vec![*g],
                    })
                    .collect(),
                banwords: bans.clone(),
                ..CategoryDef::default()
            };
            let compiled = compile(def, ctx);
            for t in &texts {
                let doc = Document::new("d", t.as_str());
                let c = common::chars(t);
                let g = gapped
                    .as_ref()
                    .map(|(a, b, n)| (a.as_str(), b.as_str(), *n));
                let raw = common::category_raw(&c, &terms, g, &bans, ctx);
                let got_raw: BTreeSet<_> = spans_of(compiled.find_raw(&doc)).into_iter().collect();
                prop_assert_eq!(&got_raw, &raw);
                prop_assert_eq!(spans_of(compiled.find(&doc)), common::merge(&raw));
            }
            Ok(())
        })
        .map_err(|e| format!("category matcher: {e}"))?;

    // wider gaps never lose matches; more bans or wider ban context never add any
    let strategy = (
        text_strategy(),
        needle_strategy(),
        needle_strategy(),
        0usize..15,
        0usize..15,
        prop::collection::vec(needle_strategy(), 0..3),
        needle_strategy(),
        0usize..4,
    );
    runner(MATCHER_CASES)
        .run(&strategy, |(texts, a, b, g1, dg, bans, extra_ban, ctx)| {
            let narrow = compile(gap_def(&a, &b, g1, &bans), ctx);
            let wide = compile(gap_def(&a, &b, g1 + dg, &bans), ctx);
            let mut more_bans = bans.clone();
            more_bans.push(extra_ban);
            let banned = compile(gap_def(&a, &b, g1, &more_bans), ctx);
            let wider_ctx = compile(gap_def(&a, &b, g1, &bans), ctx + 3);
            for t in &texts {
                let doc = Document::new("d", t.as_str());
                let base: BTreeSet<_> = spans_of(narrow.find_raw(&doc)).into_iter().collect();
                let w: BTreeSet<_> = spans_of(wide.find_raw(&doc)).into_iter().collect();
                let nb: BTreeSet<_> = spans_of(banned.find_raw(&doc)).into_iter().collect();
                let nc: BTreeSet<_> = spans_of(wider_ctx.find_raw(&doc)).into_iter().collect();
                prop_assert!(base.is_subset(&w));
                prop_assert!(nb.is_subset(&base));
                prop_assert!(nc.is_subset(&base));
            }
            Ok(())
        })
        .map_err(|e| format!("monotonicity: {e}"))?;
    Ok(format!("{MATCHER_CASES} random corpora per check"))
}

fn recall_distribution_shapes() -> Outcome {
    let fx = Fixture::build();
    let wb = fx.workbench();
    let smoking = wb
        .recall_distribution(entity::SMOKING)
        .map_err(|e| e.to_string())?;
    check(smoking.slices.len() == 3, || {
        "smoking needs 3 categories".into()
    })?;
    check(smoking.uncategorized_share == 0.0, || {
        format!("smoking grey part {}", smoking.uncategorized_share)
    })?;
    let sum: f64 = smoking.slices.iter().map(|s| s.share).sum();
    check((sum - 1.0).abs() < 1e-9, || {
        format!("smoking shares sum to {sum}")
    })?;
    check(
        smoking
            .slices
            .iter()
            .all(|s| (0.14..=0.64).contains(&s.share)),
        || {
            format!(
                "smoking shares {:?}",
                smoking.slices.iter().map(|s| s.share).collect::<Vec<_>>()
            )
        },
    )?;

    let signs = wb
        .recall_distribution(entity::PHYSICAL_SIGNS)
        .map_err(|e| e.to_string())?;
    check(signs.slices.len() == 4, || {
        "physical signs needs 4 categories".into()
    })?;
    check(
        signs
            .slices
            .iter()
            .all(|s| (s.share * 1e4).round() / 1e4 == 0.0685),
        || {
            format!(
                "physical signs shares {:?}",
                signs.slices.iter().map(|s| s.share).collect::<Vec<_>>()
            )
        },
    )?;
    check(
        (signs.uncategorized_share - 0.726).abs() <= UNCATEGORIZED_TOLERANCE,
        || format!("physical signs grey part {}", signs.uncategorized_share),
    )?;
    Ok(format!(
        "grey parts {:.3} and {:.4}",
        smoking.uncategorized_share, signs.uncategorized_share
    ))
}

fn session_round_trip() -> Outcome {
    let fx = Fixture::build();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let paths = fx.write_to(dir.path()).map_err(|e| e.to_string())?;
    let loaded = Workbench::load(fx.session(&paths)).map_err(|e| e.to_string())?;
    check(loaded.rejected.is_empty(), || {
        format!("{} rejected highlights", loaded.rejected.len())
    })?;
    let mut wb = loaded.workbench;
    apply_missed_corrections(&fx, &mut wb)?;
    let report = serde_json::to_string_pretty(&wb.full_report().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let session_path = dir.path().join("session.json");
    wb.session()
        .save(&session_path)
        .map_err(|e| e.to_string())?;
    let reloaded = ProjectSession::load(&session_path).map_err(|e| e.to_string())?;
    let wb2 = Workbench::load(reloaded)
        .map_err(|e| e.to_string())?
        .workbench;
    let report2 = serde_json::to_string_pretty(&wb2.full_report().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    check(report == report2, || "reports differ after reload".into())?;

    // saving the reloaded session reproduces the file
    let again = dir.path().join("again.json");
    wb2.session().save(&again).map_err(|e| e.to_string())?;
    let (a, b) = (std::fs::read(&session_path), std::fs::read(&again));
    check(a.ok() == b.ok(), || "session file not stable".into())?;

    // same tables from an in-memory build over the same data
    let mut mem = Workbench::open(
        Arc::new(fx.corpus.clone()),
        Arc::new(fx.expert.clone()),
        wb2.session().clone(),
    )
    .map_err(|e| e.to_string())?;
    let report3 = serde_json::to_string_pretty(&mem.full_report().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    check(report == report3, || "in-memory report differs".into())?;
    // undo everything and the pre-correction tables come back
    let fresh =
        serde_json::to_string_pretty(&fx.workbench().full_report().map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let ids: Vec<String> = mem
        .session()
        .corrections
        .entries()
        .iter()
        .map(|c| c.match_id.clone())
        .collect();
    for id in ids {
        mem.undo_correction(&id).map_err(|e| e.to_string())?;
    }
    let undone = serde_json::to_string_pretty(&mem.full_report().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    check(undone == fresh, || "undo did not restore the tables".into())?;
    Ok(format!("{} bytes of report reproduced", report.len()))
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Check; 9] = [
        ("category_precision_tables", category_precision_tables),
        (
            "entity_metrics_with_intervals",
            entity_metrics_with_intervals,
        ),
        (
            "correction_pass_entity_precision",
            correction_pass_precision,
        ),
        ("feasibility_verdicts", feasibility_verdicts),
        ("homogeneity_properties", homogeneity_properties),
        ("tfidf_oracle", tfidf_oracle),
        ("matcher_oracles", matcher_oracles),
        ("recall_distribution_shapes", recall_distribution_shapes),
        ("session_round_trip", session_round_trip),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
