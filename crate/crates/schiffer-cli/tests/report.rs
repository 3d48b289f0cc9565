mod common;

use proptest::prelude::*;
use schiffer_cli::{Check, Report, RunConfig, Status};

fn report(checks: Vec<Check>, budgets: Vec<Check>) -> Report {
    let mut r = Report::new(RunConfig::default());
    r.checks = checks;
    r.timing.budgets = budgets;
    r.finish();
    r
}

#[test]
fn empty_report_fails() {
    let r = report(vec![], vec![]);
    assert!(!r.passed());
    assert!(r.criteria.is_empty());
}

#[test]
fn per_criterion_and_overall() {
    let r = report(
        vec![Check::at_most(1, "a", 1e-12, 1e-10), Check::at_most(2, "b", 1e-8, 1e-10), Check::holds(2, "c", true)],
        vec![],
    );
    assert_eq!(r.criterion_passed(1), Some(true));
    assert_eq!(r.criterion_passed(2), Some(false));
    assert_eq!(r.criterion_passed(3), None);
    assert!(!r.passed());
    assert_eq!(r.failures().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["b"]);
}

#[test]
fn budgets_gate_their_criterion() {
    let r = report(vec![Check::holds(4, "ok", true)], vec![Check::at_most(4, "seconds", 31.0, 30.0)]);
    assert_eq!(r.criterion_passed(4), Some(false));
    assert!(!r.passed());
}

#[test]
fn non_finite_and_errored_rows() {
    let nan = Check::at_most(5, "nan", f64::NAN, 1.0);
    assert_eq!(nan.status, Status::Fail);
    assert_eq!(nan.measured, None);
    let inf = Check::at_least(5, "inf", f64::INFINITY, 1.0);
    assert_eq!(inf.status, Status::Fail);
    let e = Check::errored(6, "boom", "no convergence");
    assert!(!e.passed());
    let v = serde_json::to_value(&e).unwrap();
    assert_eq!(v["measured"], serde_json::Value::Null);
    assert_eq!(v["status"], "fail");
    assert_eq!(v["error"], "no convergence");
    assert!(serde_json::to_value(Check::holds(6, "x", true)).unwrap().get("error").is_none());
}

#[test]
fn finished_report_matches_schema() {
    let r = report(vec![Check::equal(6, "domains", 3, 1), Check::errored(7, "e", "x")], vec![]);
    common::assert_schema("report.schema.json", &serde_json::to_value(&r).unwrap());
}

proptest! {
    #[test]
    fn overall_is_conjunction(flags in prop::collection::vec((1u8..=10, any::<bool>()), 1..30)) {
        let checks = flags.iter().map(|&(id, ok)| Check::holds(id, "p", ok)).collect();
        let r = report(checks, vec![]);
        prop_assert_eq!(r.passed(), flags.iter().all(|f| f.1));
        for c in &r.criteria {
            let want = flags.iter().filter(|f| f.0 == c.criterion).all(|f| f.1);
            prop_assert_eq!(c.status == Status::Pass, want);
        }
    }
}
