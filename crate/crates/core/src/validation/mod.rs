//! Named numerical checks of the solvers and the closed-form family.
//!
//! Each check runs a pinned configuration, records the numbers it measured,
//! the tolerances it applied and the configuration itself, and reports a
//! status. [`run_all`] runs a selection and can write a report file with one
//! `key=value` record per check.

mod checks;
pub mod problems;

pub use checks::{
    check_benchmark_accuracy, check_explicit_divergence, check_guess_independence, check_nonlinearity_gap,
    check_rho_monotonicity, check_spread_sweep,
};

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    pub metrics: Vec<(String, f64)>,
    pub tolerances: Vec<(String, f64)>,
    pub config: Vec<(String, String)>,
    pub notes: Vec<(String, String)>,
    pub runtime: Duration,
}

impl CheckReport {
    pub(crate) fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            status: Status::Info,
            metrics: Vec::new(),
            tolerances: Vec::new(),
            config: Vec::new(),
            notes: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    pub(crate) fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.push((key.into(), value));
    }

    pub(crate) fn tolerance(&mut self, key: impl Into<String>, value: f64) {
        self.tolerances.push((key.into(), value));
    }

    pub(crate) fn config(&mut self, key: impl Into<String>, value: impl ToString) {
        self.config.push((key.into(), value.to_string()));
    }

    pub(crate) fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// The report as a single `key=value` line.
    pub fn to_record(&self) -> String {
        let mut line = format!(
            "check={} status={} runtime_s={:.3}",
            self.name,
            self.status.as_str(),
            self.runtime.as_secs_f64()
        );
        for (k, v) in &self.metrics {
            let _ = write!(line, " metric.{k}={v:e}");
        }
        for (k, v) in &self.tolerances {
            let _ = write!(line, " tol.{k}={v:e}");
        }
        for (k, v) in &self.config {
            let _ = write!(line, " cfg.{k}={}", quote(v));
        }
        for (k, v) in &self.notes {
            let _ = write!(line, " note.{k}={}", quote(v));
        }
        line
    }
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.contains(char::is_whitespace) || v.contains('"') {
        format!("\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\""))
    } else {
        v.to_string()
    }
}

type CheckFn = fn() -> CheckReport;

/// Registered checks, in run order.
pub const CHECKS: [(&str, CheckFn); 6] = [
    ("benchmark_accuracy", check_benchmark_accuracy),
    ("rho_monotonicity", check_rho_monotonicity),
    ("nonlinearity_gap", check_nonlinearity_gap),
    ("guess_independence", check_guess_independence),
    ("explicit_divergence", check_explicit_divergence),
    ("spread_sweep", check_spread_sweep),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    All,
    Names(Vec<String>),
}

impl Selection {
    /// `"all"` or a comma-separated list of check names.
    pub fn parse(s: &str) -> Self {
        if s.trim() == "all" {
            Selection::All
        } else {
            Selection::Names(
                s.split(',')
                    .map(|n| n.trim().to_string())
                    .filter(|n| !n.is_empty())
                    .collect(),
            )
        }
    }
}

/// Run the selected checks; write the report to `report_path` if given.
///
/// Names are resolved before anything runs, so an unknown name fails fast.
pub fn run_all(selection: &Selection, report_path: Option<&Path>) -> Result<Vec<CheckReport>> {
    let chosen: Vec<CheckFn> = match selection {
        Selection::All => CHECKS.iter().map(|(_, f)| *f).collect(),
        Selection::Names(names) => names
            .iter()
            .map(|n| {
                CHECKS
                    .iter()
                    .find(|(name, _)| name == n)
                    .map(|(_, f)| *f)
                    .ok_or_else(|| Error::UnknownCheck(n.clone()))
            })
            .collect::<Result<_>>()?,
    };
    let reports: Vec<CheckReport> = chosen.into_iter().map(|f| f()).collect();
    if let Some(path) = report_path {
        write_report(path, &reports)?;
    }
    Ok(reports)
}

pub fn write_report(path: &Path, reports: &[CheckReport]) -> Result<()> {
    let mut text = String::new();
    for r in reports {
        text.push_str(&r.to_record());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(quote("plain"), "plain");
        assert_eq!(quote(""), "\"\"");
        assert_eq!(quote("a b"), "\"a b\"");
        assert_eq!(quote("say \"x\""), "\"say \\\"x\\\"\"");
    }

    #[test]
    fn record_layout() {
        let mut r = CheckReport::new("demo");
        r.status = Status::Pass;
        r.metric("err", 0.5);
        r.tolerance("err", 1.0);
        r.config("grid", "16x15");
        assert_eq!(
            r.to_record(),
            "check=demo status=pass runtime_s=0.000 metric.err=5e-1 tol.err=1e0 cfg.grid=16x15"
        );
    }
}
