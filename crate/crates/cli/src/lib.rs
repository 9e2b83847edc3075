//! Scenario runner for `qframe`: loads a scenario file, evaluates the named
//! checks at every sample point and produces a report.

pub mod checks;
pub mod report;
pub mod scenario;

pub use checks::{find_check, run_checks, CheckDef, Requirement, CHECKS};
pub use report::{emit_report, Format, Record, Report, Summary};
pub use scenario::{load_scenario, parse_scenario, CheckSelection, Overrides, Scenario, ScenarioError};
