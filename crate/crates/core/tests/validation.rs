use std::time::Instant;

use hedgecost::validation::{run_all, write_report, Selection, Status, CHECKS};
use hedgecost::Error;

#[test]
fn empty_selection_runs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let reports = run_all(&Selection::parse(""), Some(&path)).unwrap();
    assert!(reports.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
}

#[test]
fn unknown_name_fails_before_running() {
    let err = run_all(&Selection::parse("nonlinearity_gap,no_such_check"), None).unwrap_err();
    assert!(matches!(err, Error::UnknownCheck(ref n) if n == "no_such_check"));
}

#[test]
fn selection_parsing() {
    assert_eq!(Selection::parse(" all "), Selection::All);
    assert_eq!(
        Selection::parse("a, b,,c"),
        Selection::Names(vec!["a".into(), "b".into(), "c".into()])
    );
}

#[test]
fn full_run_within_budget_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let start = Instant::now();
    let reports = run_all(&Selection::All, Some(&path)).unwrap();
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(reports.len(), CHECKS.len());

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), reports.len());
    for (line, r) in lines.iter().zip(&reports) {
        assert!(line.starts_with(&format!("check={} status=", r.name)));
        assert!(!r.metrics.is_empty(), "{} has no metrics", r.name);
        assert!(!r.config.is_empty(), "{} has no configuration", r.name);
        assert!(line.contains(" metric.") && line.contains(" tol.") && line.contains(" cfg."));
        assert_ne!(r.status, Status::Info);
    }
}

#[test]
fn property_checks_pass() {
    let reports = run_all(
        &Selection::parse("rho_monotonicity,nonlinearity_gap,spread_sweep"),
        None,
    )
    .unwrap();
    for r in &reports {
        assert!(r.passed(), "{}", r.to_record());
    }
    let gap = &reports[1];
    assert_eq!(gap.get("gap_at_s_min"), Some(0.0));
    assert_eq!(gap.get("gap_at_s_max"), Some(0.0));
    assert!(gap.get("linear_gap_max").unwrap() <= 1e-10);
    let spread = &reports[2];
    assert_eq!(spread.get("terminal_vs_payoff"), Some(0.0));
}

#[test]
fn checks_are_deterministic() {
    for name in ["benchmark_accuracy", "guess_independence", "explicit_divergence"] {
        let a = run_all(&Selection::parse(name), None).unwrap();
        let b = run_all(&Selection::parse(name), None).unwrap();
        assert_eq!(a[0].metrics, b[0].metrics);
        assert_eq!(a[0].status, b[0].status);
        assert_eq!(a[0].config, b[0].config);
    }
}

#[test]
fn report_values_are_quoted_when_needed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    let mut reports = run_all(&Selection::parse("nonlinearity_gap"), None).unwrap();
    reports[0].notes.push(("why".into(), "two words".into()));
    write_report(&path, &reports).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("note.why=\"two words\""));
    assert!(write_report(&dir.path().join("missing/r.txt"), &reports).is_err());
}
