//! The four-criterion rules-vs-ML checklist.
//!
//! Criteria are checked in a fixed order: TH (number of gold highlights),
//! LH (transformed homogeneity), ER (entity recall), EP (entity precision).
//! In sequential mode everything after the first failure is left
//! unevaluated, rendered as `-`.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChecklistThresholds {
    pub th_min: usize,
    pub lh_min: f64,
    pub er_min: f64,
    pub ep_min: f64,
    pub sequential: bool,
}

impl Default for ChecklistThresholds {
    fn default() -> Self {
        Self {
            th_min: 25,
            lh_min: 0.10,
            er_min: 0.75,
            ep_min: 0.75,
            sequential: true,
        }
    }
}

impl ChecklistThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.th_min < 1 {
            return Err(Error::InvalidThresholds("th_min must be at least 1".into()));
        }
        for (name, v) in [
            ("lh_min", self.lh_min),
            ("er_min", self.er_min),
            ("ep_min", self.ep_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidThresholds(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    TH,
    LH,
    ER,
    EP,
}

impl Criterion {
    pub const ORDER: [Criterion; 4] = [Self::TH, Self::LH, Self::ER, Self::EP];

    pub fn description(self) -> &'static str {
        match self {
            Self::TH => "number of text highlights",
            Self::LH => "linguistic homogeneity",
            Self::ER => "entity recall",
            Self::EP => "entity precision",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    NotEvaluated,
}

impl Status {
    /// Table cell: `Yes`, `No` or `-`.
    pub fn cell(self) -> &'static str {
        match self {
            Self::Pass => "Yes",
            Self::Fail => "No",
            Self::NotEvaluated => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    RulesFeasible,
    RulesNotFeasible,
    /// Nothing failed yet but some criterion could not be evaluated.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub name: Criterion,
    pub value: Option<f64>,
    pub threshold: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// The measured quantities the checklist compares against thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChecklistInputs {
    pub highlights: usize,
    pub homogeneity: f64,
    pub has_categories: bool,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecklistResult {
    pub entity: String,
    pub criteria: Vec<CriterionOutcome>,
    pub verdict: Verdict,
    pub thresholds: ChecklistThresholds,
}

impl ChecklistResult {
    pub fn status(&self, name: Criterion) -> Status {
        self.criteria
            .iter()
            .find(|c| c.name == name)
            .map_or(Status::NotEvaluated, |c| c.status)
    }
}

pub fn evaluate_checklist(
    entity: &str,
    inputs: &ChecklistInputs,
    thresholds: &ChecklistThresholds,
) -> ChecklistResult {
    let mut criteria = Vec::with_capacity(4);
    let mut failed = false;
    for name in Criterion::ORDER {
        let threshold = match name {
            Criterion::TH => thresholds.th_min as f64,
            Criterion::LH => thresholds.lh_min,
            Criterion::ER => thresholds.er_min,
            Criterion::EP => thresholds.ep_min,
        };
        let (value, missing) = match name {
            Criterion::TH => (Some(inputs.highlights as f64), None),
            Criterion::LH => (Some(inputs.homogeneity), None),
            Criterion::ER | Criterion::EP if !inputs.has_categories => {
                (None, Some("no categories"))
            }
            Criterion::ER => (
                inputs.recall,
                inputs.recall.is_none().then_some("recall undefined"),
            ),
            Criterion::EP => (
                inputs.precision,
                inputs.precision.is_none().then_some("no matches"),
            ),
        };
        let (status, reason) = if failed && thresholds.sequential {
            (
                Status::NotEvaluated,
                Some("an earlier criterion failed".to_owned()),
            )
        } else if let Some(why) = missing {
            (Status::NotEvaluated, Some(why.to_owned()))
        } else if value.is_some_and(|v| v >= threshold) {
            (Status::Pass, None)
        } else {
            (Status::Fail, None)
        };
        failed |= status == Status::Fail;
        criteria.push(CriterionOutcome {
            name,
            value,
            threshold,
            status,
            reason,
        });
    }
    let verdict = if failed {
        Verdict::RulesNotFeasible
    } else if criteria.iter().all(|c| c.status == Status::Pass) {
        Verdict::RulesFeasible
    } else {
        Verdict::Incomplete
    };
    ChecklistResult {
        entity: entity.to_owned(),
        criteria,
        verdict,
        thresholds: *thresholds,
    }
}

/// Plain-text table in the Entity | Criteria | Result layout.
pub fn render_table(results: &[ChecklistResult]) -> String {
    let width = results
        .iter()
        .map(|r| r.entity.chars().count())
        .max()
        .unwrap_or(0)
        .max("Entity".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:<10}  Result", "Entity", "Criteria");
    for r in results {
        for (i, c) in r.criteria.iter().enumerate() {
            let label = match c.name {
                Criterion::TH => format!("TH >= {}", c.threshold),
                other => format!("{other} >= {:.0}%", c.threshold * 100.0),
            };
            let entity = if i == 0 { r.entity.as_str() } else { "" };
            let _ = writeln!(out, "{entity:<width$}  {label:<10}  {}", c.status.cell());
        }
        let verdict = match r.verdict {
            Verdict::RulesFeasible => "rules feasible",
            Verdict::RulesNotFeasible => "rules not feasible",
            Verdict::Incomplete => "incomplete",
        };
        let _ = writeln!(out, "{:<width$}  {:<10}  {verdict}", "", "verdict");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(h: usize, lh: f64, er: f64, ep: f64) -> ChecklistInputs {
        ChecklistInputs {
            highlights: h,
            homogeneity: lh,
            has_categories: true,
            recall: Some(er),
            precision: Some(ep),
        }
    }

    fn statuses(r: &ChecklistResult) -> Vec<&'static str> {
        r.criteria.iter().map(|c| c.status.cell()).collect()
    }

    #[test]
    fn all_pass() {
        let r = evaluate_checklist("smoking", &inputs(50, 0.62, 1.0, 0.9), &Default::default());
        assert_eq!(statuses(&r), ["Yes", "Yes", "Yes", "Yes"]);
        assert_eq!(r.verdict, Verdict::RulesFeasible);
    }

    #[test]
    fn th_failure_skips_the_rest() {
        let r = evaluate_checklist(
            "progression",
            &inputs(12, 0.01, 0.0, 0.0),
            &Default::default(),
        );
        assert_eq!(statuses(&r), ["No", "-", "-", "-"]);
        assert_eq!(r.verdict, Verdict::RulesNotFeasible);
    }

    #[test]
    fn er_failure() {
        let r = evaluate_checklist("signs", &inputs(73, 0.29, 0.27, 0.9), &Default::default());
        assert_eq!(statuses(&r), ["Yes", "Yes", "No", "-"]);
        let nonseq = ChecklistThresholds {
            sequential: false,
            ..Default::default()
        };
        let r2 = evaluate_checklist("signs", &inputs(73, 0.29, 0.27, 0.9), &nonseq);
        assert_eq!(statuses(&r2), ["Yes", "Yes", "No", "Yes"]);
        assert_eq!(r2.verdict, Verdict::RulesNotFeasible);
    }

    #[test]
    fn boundary_values_pass() {
        let r = evaluate_checklist("e", &inputs(25, 0.10, 0.75, 0.75), &Default::default());
        assert_eq!(r.verdict, Verdict::RulesFeasible);
    }

    #[test]
    fn no_categories_is_incomplete() {
        let i = ChecklistInputs {
            highlights: 30,
            homogeneity: 0.5,
            has_categories: false,
            recall: None,
            precision: None,
        };
        let r = evaluate_checklist("e", &i, &Default::default());
        assert_eq!(statuses(&r), ["Yes", "Yes", "-", "-"]);
        assert_eq!(r.criteria[2].reason.as_deref(), Some("no categories"));
        assert_eq!(r.verdict, Verdict::Incomplete);
    }

    #[test]
    fn threshold_validation() {
        assert!(ChecklistThresholds::default().validate().is_ok());
        let bad = ChecklistThresholds {
            er_min: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ChecklistThresholds {
            th_min: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn table_rendering() {
        let r = evaluate_checklist(
            "progression",
            &inputs(12, 0.01, 0.0, 0.0),
            &Default::default(),
        );
        let table = render_table(&[r]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("progression") && lines[1].ends_with("No"));
        assert!(lines[2].contains("LH >= 10%") && lines[2].ends_with('-'));
    }
}
