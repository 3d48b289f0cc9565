//! Verification report: one row per check, grouped by criterion.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// How `measured` is compared with `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Equal,
    /// A boolean predicate; `measured` is 1 when it holds.
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub status: Status,
    /// `null` when the computation failed; see `error`.
    pub measured: Option<f64>,
    pub tolerance: f64,
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Check {
    pub fn at_most(criterion: u8, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check::compare(criterion, name, measured, tolerance, Relation::AtMost, measured <= tolerance)
    }

    pub fn at_least(criterion: u8, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check::compare(criterion, name, measured, tolerance, Relation::AtLeast, measured >= tolerance)
    }

    pub fn equal(criterion: u8, name: impl Into<String>, measured: usize, expected: usize) -> Self {
        Check::compare(criterion, name, measured as f64, expected as f64, Relation::Equal, measured == expected)
    }

    pub fn holds(criterion: u8, name: impl Into<String>, ok: bool) -> Self {
        Check::compare(criterion, name, if ok { 1.0 } else { 0.0 }, 1.0, Relation::Holds, ok)
    }

    /// A check whose computation returned an error.
    pub fn errored(criterion: u8, name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Check {
            criterion,
            name: name.into(),
            status: Status::Fail,
            measured: None,
            tolerance: 0.0,
            relation: Relation::Holds,
            error: Some(err.to_string()),
        }
    }

    fn compare(criterion: u8, name: impl Into<String>, measured: f64, tolerance: f64, relation: Relation, ok: bool) -> Self {
        Check {
            criterion,
            name: name.into(),
            status: Status::of(ok && measured.is_finite()),
            measured: finite(measured),
            tolerance,
            relation,
            error: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Compact description of one traced branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub label: String,
    pub points: usize,
    pub s_reached: f64,
    pub truncated: bool,
    #[serde(rename = "max_residual_G")]
    pub max_residual_g: f64,
    pub max_residual_oracle: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Wall-clock data; the only part of a report that varies between runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub criteria: Vec<CriterionTime>,
    pub total_seconds: f64,
    /// Runtime budgets, each a gating check.
    pub budgets: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionTime {
    pub criterion: u8,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionStatus {
    pub criterion: u8,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub checks: Vec<Check>,
    /// Reported quantities that do not gate the result.
    pub diagnostics: Vec<Check>,
    pub branches: Vec<BranchSummary>,
    pub criteria: Vec<CriterionStatus>,
    pub timing: Timing,
    pub status: Status,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            config,
            checks: Vec::new(),
            diagnostics: Vec::new(),
            branches: Vec::new(),
            criteria: Vec::new(),
            timing: Timing::default(),
            status: Status::Fail,
        }
    }

    /// Fill `criteria` and `status` from the checks and budgets.
    pub fn finish(&mut self) {
        let mut ids: Vec<u8> = self.checks.iter().chain(&self.timing.budgets).map(|c| c.criterion).collect();
        ids.sort_unstable();
        ids.dedup();
        self.criteria = ids
            .into_iter()
            .map(|id| {
                let ok = self.checks.iter().chain(&self.timing.budgets).filter(|c| c.criterion == id).all(Check::passed);
                CriterionStatus { criterion: id, status: Status::of(ok) }
            })
            .collect();
        let ok = !self.checks.is_empty() && self.checks.iter().chain(&self.timing.budgets).all(Check::passed);
        self.status = Status::of(ok);
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn criterion_passed(&self, id: u8) -> Option<bool> {
        self.criteria.iter().find(|c| c.criterion == id).map(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().chain(&self.timing.budgets).filter(|c| !c.passed())
    }
}
