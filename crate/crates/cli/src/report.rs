use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// The property being checked, in words.
    pub anchor: String,
    pub status: Status,
    pub witness: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Timing is kept out of the serialized form so that reports are byte
/// identical across runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub instance: String,
    pub version: String,
    pub seed: u64,
    pub tol: f64,
    pub cap: usize,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn new(instance: &str, seed: u64, tol: f64, cap: usize, suites: Vec<SuiteReport>) -> Report {
        Report {
            instance: instance.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tol,
            cap,
            passed: suites.iter().all(|s| s.passed),
            suites,
        }
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == name)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance", "seed", "suite", "id", "anchor", "status", "witness"])
            .expect("in-memory write");
        for suite in &self.suites {
            for check in &suite.checks {
                w.write_record([
                    self.instance.as_str(),
                    &self.seed.to_string(),
                    suite.suite.as_str(),
                    check.id.as_str(),
                    check.anchor.as_str(),
                    check.status.as_str(),
                    &check.witness.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}
