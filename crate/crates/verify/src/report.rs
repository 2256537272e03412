use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scenario::{Mode, Scenario};
use crate::HarnessError;

/// Bumped whenever a field is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The statement the check certifies.
    pub anchor: String,
    pub status: Status,
    /// Largest measured residual for floating checks; null for exact ones.
    pub residual: Option<f64>,
    pub verdict: String,
    /// Wall time, recorded in float mode only.
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub mode: Mode,
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub totals: Totals,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

impl Report {
    pub fn new(scenario: &Scenario, mut checks: Vec<Check>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let mut totals = Totals::default();
        for c in &checks {
            match c.status {
                Status::Pass => totals.pass += 1,
                Status::Fail => totals.fail += 1,
                Status::Skip => totals.skip += 1,
            }
        }
        Report {
            schema_version: SCHEMA_VERSION,
            suite: scenario.suite.clone(),
            seed: scenario.seed,
            mode: scenario.mode,
            scenario: scenario.clone(),
            checks,
            totals,
        }
    }

    pub fn passed(&self) -> bool {
        self.totals.fail == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "suite {}  seed {}  mode {}", self.suite, self.seed, self.mode);
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(out, "{:<width$}  {:<6} {:>12} {:>10}  verdict", "check", "status", "residual", "ms");
        for c in &self.checks {
            let res = c.residual.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "-".into());
            let ms = c.elapsed_ms.map(|t| format!("{t:.1}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<width$}  {:<6} {:>12} {:>10}  {}", c.name, c.status.label(), res, ms, c.verdict);
        }
        let t = &self.totals;
        let _ = writeln!(out, "{} passed, {} failed, {} skipped", t.pass, t.fail, t.skip);
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
        }
    }
}

/// Writes to `path`, or stdout when no path is given.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), HarnessError> {
    let body = report.render(format);
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| HarnessError::Io(e.to_string())),
    }
}
