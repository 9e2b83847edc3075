//! Run reports and their JSON and text renderings.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::scenario::{CheckSelection, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check: String,
    pub point: [f64; 4],
    /// Absent when the check could not be evaluated.
    pub residual: Option<f64>,
    /// Absent for diagnostics, which always pass.
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub diagnostic: Option<String>,
}

impl Record {
    pub fn failed(check: &str, point: [f64; 4], tolerance: Option<f64>, diagnostic: String) -> Self {
        Self {
            check: check.to_string(),
            point,
            residual: None,
            tolerance,
            pass: false,
            diagnostic: Some(diagnostic),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of(records: &[Record]) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        Self {
            total: records.len(),
            passed,
            failed: records.len() - passed,
        }
    }
}

/// The effective run settings after command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub points: usize,
    pub explicit_points: usize,
    pub fd_step: [f64; 4],
    pub fd_order: u32,
    pub tolerance_override: Option<f64>,
    pub checks: Vec<String>,
}

impl Settings {
    pub fn of(s: &Scenario) -> Self {
        Self {
            seed: s.sampling.seed,
            points: s.sampling.points,
            explicit_points: s.sampling.explicit.len(),
            fd_step: s.fd.step,
            fd_order: s.fd.order.as_u32(),
            tolerance_override: s.tolerance_override,
            checks: match &s.checks {
                CheckSelection::All => vec!["all".into()],
                CheckSelection::Named(n) => n.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub name: String,
    pub scenario: serde_json::Value,
    pub settings: Settings,
    pub records: Vec<Record>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}: {}", self.tool, self.version, self.name);
        let _ = writeln!(
            out,
            "{:<6} {:<26} {:<36} {:>12} {:>10}",
            "status", "check", "point", "residual", "tolerance"
        );
        for r in &self.records {
            let status = if !r.pass {
                "FAIL"
            } else if r.tolerance.is_none() {
                "info"
            } else {
                "ok"
            };
            let point = format!(
                "({:.3}, {:.3}, {:.3}, {:.3})",
                r.point[0], r.point[1], r.point[2], r.point[3]
            );
            let residual = r.residual.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let tol = r.tolerance.map_or("-".to_string(), |v| format!("{v:.1e}"));
            let _ = write!(out, "{status:<6} {:<26} {point:<36} {residual:>12} {tol:>10}", r.check);
            if let Some(d) = &r.diagnostic {
                let _ = write!(out, "  {d}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{} checks: {} passed, {} failed",
            self.summary.total, self.summary.passed, self.summary.failed
        );
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }
}

/// Write the report to `path`, or to stdout when `path` is `None` or `-`.
pub fn emit_report(report: &Report, format: Format, path: Option<&std::path::Path>) -> io::Result<()> {
    let body = report.render(format);
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, body),
        _ => io::stdout().lock().write_all(body.as_bytes()),
    }
}
