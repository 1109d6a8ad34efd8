//! Check reports and the files a run writes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use grushin_core::{CheckRow, CheckStatus};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const PROFILE_FILE: &str = "profile.csv";
pub const REPORT_FILE: &str = "report.json";
pub const GRID_FILE: &str = "grid.txt";

/// Rows and structured details produced by one or more suites.
#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub rows: Vec<CheckRow>,
    pub details: BTreeMap<String, Value>,
    pub profile_csv: Option<String>,
    pub grid_text: Option<String>,
}

impl SuiteOutput {
    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report details serialize");
        self.details.insert(key.into(), v);
    }

    pub fn merge(&mut self, other: SuiteOutput) {
        self.rows.extend(other.rows);
        self.details.extend(other.details);
        if other.profile_csv.is_some() {
            self.profile_csv = other.profile_csv;
        }
        if other.grid_text.is_some() {
            self.grid_text = other.grid_text;
        }
    }

    pub fn status(&self) -> CheckStatus {
        self.rows.iter().fold(CheckStatus::Pass, |s, r| s.combine(r.status))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    pub status: CheckStatus,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckRow>,
    pub details: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(subcommand: &str, config: &ExperimentConfig, out: &SuiteOutput) -> Self {
        Report {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            status: out.status(),
            config: config.clone(),
            checks: out.rows.clone(),
            details: out.details.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One aligned line per check.
    pub fn to_table(&self) -> String {
        let width = self.checks.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<12}  {:>8}  {:>13}  {:>10}",
            "check", "status", "points", "max_violation", "tolerance"
        );
        for r in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:<12}  {:>8}  {:>13.4e}  {:>10.2e}",
                r.name,
                r.status.as_str(),
                r.points,
                r.max_violation,
                r.tolerance
            );
        }
        let _ = writeln!(out, "overall: {}", self.status);
        out
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.status)
    }
}

/// 0 when every check passes, 1 on any failure, 2 when something is
/// inconclusive and nothing failed.
pub fn exit_code(status: CheckStatus) -> i32 {
    match status {
        CheckStatus::Pass => 0,
        CheckStatus::Fail => 1,
        CheckStatus::Inconclusive => 2,
    }
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes the report, and the profile and grid when present, into `dir`.
pub fn write_artifacts(dir: &Path, report: &Report, out: &SuiteOutput) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write(&dir.join(REPORT_FILE), &report.to_json())?;
    if let Some(csv) = &out.profile_csv {
        write(&dir.join(PROFILE_FILE), csv)?;
    }
    if let Some(grid) = &out.grid_text {
        write(&dir.join(GRID_FILE), grid)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(status: CheckStatus) -> CheckRow {
        CheckRow {
            name: "x".into(),
            anchor: "a".into(),
            points: 1,
            max_violation: 0.0,
            tolerance: 1.0,
            status,
        }
    }

    #[test]
    fn exit_codes_follow_the_worst_row() {
        let mut out = SuiteOutput::default();
        assert_eq!(exit_code(out.status()), 0);
        out.rows.push(row(CheckStatus::Pass));
        out.rows.push(row(CheckStatus::Inconclusive));
        assert_eq!(exit_code(out.status()), 2);
        out.rows.push(row(CheckStatus::Fail));
        assert_eq!(exit_code(out.status()), 1);
    }

    #[test]
    fn json_has_no_clock_fields() {
        let mut out = SuiteOutput::default();
        out.rows.push(row(CheckStatus::Pass));
        let r = Report::new("geometry-check", &ExperimentConfig::default(), &out);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["checks", "config", "details", "seed", "status", "subcommand", "version"]);
        assert_eq!(v["checks"][0]["anchor"], "a");
        assert_eq!(r.to_json(), Report::new("geometry-check", &ExperimentConfig::default(), &out).to_json());
    }
}
