use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qframe_cli::scenario::Overrides;
use qframe_cli::{
    load_scenario, parse_scenario, run_checks, CheckSelection, Report, Scenario, ScenarioError, Summary, CHECKS,
};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(scenarios_dir().join(format!("{name}.scn"))).unwrap()
}

fn qframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qframe")).args(args).output().unwrap()
}

fn with_points(text: &str, n: usize) -> Scenario {
    let mut s = parse_scenario(text, "test").unwrap();
    s.sampling.points = n;
    s
}

const MINIMAL: &str = r#"
[chart]
coordinates = ["t", "x", "y", "z"]

[basis]
s0 = ["im", "0", "0", "0"]
s1 = ["0", "1", "0", "0"]
s2 = ["0", "0", "1", "0"]
s3 = ["0", "0", "0", "1"]
"#;

#[test]
fn every_fixture_passes_at_default_settings() {
    for name in ["flat", "scaled", "torsion", "u1", "lorentz_u1"] {
        let s = load_scenario(&scenarios_dir().join(format!("{name}.scn"))).unwrap();
        assert_eq!(s.sampling.points, 25);
        let report = run_checks(&s).unwrap();
        let failures: Vec<_> = report.records.iter().filter(|r| !r.pass).collect();
        assert!(failures.is_empty(), "{name}: {failures:#?}");
    }
}

#[test]
fn flat_residuals_vanish() {
    let report = run_checks(&load_scenario(&scenarios_dir().join("flat.scn")).unwrap()).unwrap();
    for r in &report.records {
        assert!(r.residual.unwrap() <= 1e-10, "{}: {:?}", r.check, r.residual);
    }
}

#[test]
fn every_requested_check_appears_once_per_point() {
    let mut s = with_points(&fixture_text("lorentz_u1"), 4);
    s.sampling.explicit.push(qframe::Point::new([0.1, 0.2, 0.3, 0.4]));
    let report = run_checks(&s).unwrap();
    // lorentz_u1 lacks only the coordinate map.
    let expected: Vec<_> = CHECKS
        .iter()
        .map(|c| c.name)
        .filter(|n| !n.starts_with("jacobian") && *n != "coordinate_gamma")
        .collect();
    assert_eq!(report.records.len(), expected.len() * 5);
    for name in expected {
        assert_eq!(report.records.iter().filter(|r| r.check == name).count(), 5, "{name}");
    }
    // Explicit points come first.
    assert_eq!(report.records[0].point, [0.1, 0.2, 0.3, 0.4]);
}

#[test]
fn minimal_scenario_uses_defaults() {
    let s = parse_scenario(MINIMAL, "minimal").unwrap();
    assert_eq!(s.name, "minimal");
    assert_eq!(s.sampling.points, 25);
    assert_eq!(s.sampling.seed, 0);
    assert_eq!(s.fd.step, [1e-4; 4]);
    assert_eq!(s.checks, CheckSelection::All);
    assert!(s.lorentz.is_none() && s.u1.is_none() && s.coordinate_map.is_none());
    let report = run_checks(&s).unwrap();
    assert!(report.all_passed());
}

#[test]
fn real_scalar_basis_is_rejected_naming_s0() {
    let text = MINIMAL.replace(r#"s0 = ["im", "0", "0", "0"]"#, r#"s0 = ["1", "0", "0", "0"]"#);
    let s = parse_scenario(&text, "bad").unwrap();
    let err = s.sample_points().unwrap_err();
    assert!(matches!(err, ScenarioError::Invariant { .. }));
    assert!(err.to_string().contains("s_0"), "{err}");
    assert!(err.to_string().contains("minus part"), "{err}");
}

#[test]
fn real_scalar_connection_is_rejected() {
    let text = format!("{MINIMAL}\n[connection]\nw2 = [\"1\", \"0\", \"0\", \"0\"]\n");
    let err = parse_scenario(&text, "bad").unwrap().sample_points().unwrap_err();
    assert!(
        err.to_string().contains("ω_2") && err.to_string().contains("Scal(ω + ω̄*)"),
        "{err}"
    );
}

#[test]
fn expression_errors_carry_file_positions() {
    let text = MINIMAL.replace(r#"s2 = ["0", "0", "1", "0"]"#, r#"s2 = ["0", "0", "1 +* y", "0"]"#);
    match parse_scenario(&text, "bad").unwrap_err() {
        ScenarioError::Expression {
            location, line, column, ..
        } => {
            assert_eq!(location, "basis.s2[2]");
            let src_line = text.lines().nth(line - 1).unwrap();
            assert!(src_line.starts_with("s2 ="));
            // The column points at the offending `*`.
            assert_eq!(&src_line[column - 1..column], "*");
        }
        other => panic!("{other}"),
    }
    let unknown = MINIMAL.replace(r#"s3 = ["0", "0", "0", "1"]"#, r#"s3 = ["0", "0", "0", "w"]"#);
    let err = parse_scenario(&unknown, "bad").unwrap_err();
    assert!(err.to_string().contains("`w`"), "{err}");
}

#[test]
fn structural_errors() {
    let typo = format!("{MINIMAL}\n[sampling]\npoint = 3\n");
    assert!(matches!(parse_scenario(&typo, "x"), Err(ScenarioError::Syntax(_))));
    let order = format!("{MINIMAL}\n[numerics]\nfd_order = 3\n");
    assert!(matches!(
        parse_scenario(&order, "x"),
        Err(ScenarioError::Invalid { .. })
    ));
    let step = format!("{MINIMAL}\n[numerics]\nfd_step = 0.0\n");
    assert!(matches!(parse_scenario(&step, "x"), Err(ScenarioError::Invalid { .. })));
    let unknown = format!("{MINIMAL}\n[checks]\nrun = [\"minimality\", \"bogus\"]\n");
    assert!(parse_scenario(&unknown, "x").unwrap_err().to_string().contains("bogus"));
    let diag_tol = format!("{MINIMAL}\n[tolerances]\ntorsion_norm = 1.0\n");
    assert!(parse_scenario(&diag_tol, "x").is_err());
    let chart = MINIMAL.replace(r#"["t", "x", "y", "z"]"#, r#"["t", "t", "y", "z"]"#);
    assert!(parse_scenario(&chart, "x").is_err());
    let box_ = format!("{MINIMAL}\n[sampling]\nbox_min = [1.0, 0.0, 0.0, 0.0]\nbox_max = [0.0, 1.0, 1.0, 1.0]\n");
    assert!(parse_scenario(&box_, "x").is_err());
    let missing = std::env::temp_dir().join("qframe-does-not-exist.scn");
    assert!(matches!(load_scenario(&missing), Err(ScenarioError::Io { .. })));
}

#[test]
fn singular_points_are_resampled_but_explicit_ones_are_errors() {
    // log is undefined for x <= 0, so random draws there are replaced.
    let text = MINIMAL.replace(
        r#"s1 = ["0", "1", "0", "0"]"#,
        r#"s1 = ["0", "1 + 0.1*log(x)", "0", "0"]"#,
    );
    let mut s = parse_scenario(&text, "log").unwrap();
    let pts = s.sample_points().unwrap();
    assert_eq!(pts.len(), 25);
    assert!(pts.iter().all(|p| p.x[1] > 0.0));
    s.sampling.explicit.push(qframe::Point::new([0.0, -0.5, 0.0, 0.0]));
    assert!(matches!(s.sample_points(), Err(ScenarioError::Invariant { .. })));
    s.sampling.explicit.clear();
    s.sampling.box_max[1] = -0.1;
    assert!(matches!(s.sample_points(), Err(ScenarioError::Sampling { .. })));
}

#[test]
fn reports_are_deterministic_and_seeded() {
    let s = with_points(&fixture_text("torsion"), 6);
    let a = run_checks(&s).unwrap().to_json();
    let b = run_checks(&s).unwrap().to_json();
    assert_eq!(a, b);
    let mut other = s.clone();
    Overrides {
        seed: Some(99),
        ..Default::default()
    }
    .apply(&mut other)
    .unwrap();
    assert_ne!(a, run_checks(&other).unwrap().to_json());
}

#[test]
fn json_round_trips() {
    let report = run_checks(&with_points(&fixture_text("u1"), 3)).unwrap();
    let back: Report = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.summary, Summary::of(&back.records));
    let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(value["scenario"]["u1"]["phi"], "0.5*t");
    assert_eq!(value["settings"]["points"], 3);
    assert_eq!(value["tool"], "qframe");
}

#[test]
fn overrides() {
    let mut s = with_points(&fixture_text("scaled"), 2);
    let o = Overrides {
        seed: Some(7),
        points: Some(3),
        fd_step: Some(1e-3),
        fd_order: Some(2),
        tolerance: None,
        checks: Some(vec!["minimality".into(), "torsion_norm".into()]),
    };
    o.apply(&mut s).unwrap();
    assert_eq!(s.fd.step, [1e-3; 4]);
    assert_eq!(s.fd.order, qframe::FdOrder::Second);
    let report = run_checks(&s).unwrap();
    assert_eq!(report.records.len(), 6);
    assert_eq!(report.settings.seed, 7);
    assert_eq!(report.settings.fd_order, 2);

    // A zero tolerance fails every nonzero residual; diagnostics still pass.
    Overrides {
        tolerance: Some(0.0),
        ..Default::default()
    }
    .apply(&mut s)
    .unwrap();
    let report = run_checks(&s).unwrap();
    for r in &report.records {
        match r.check.as_str() {
            "torsion_norm" => assert!(r.pass && r.tolerance.is_none()),
            _ => assert_eq!(r.pass, r.residual == Some(0.0)),
        }
    }

    for bad in [
        Overrides {
            fd_order: Some(3),
            ..Default::default()
        },
        Overrides {
            fd_step: Some(-1.0),
            ..Default::default()
        },
        Overrides {
            tolerance: Some(f64::NAN),
            ..Default::default()
        },
        Overrides {
            checks: Some(vec!["nope".into()]),
            ..Default::default()
        },
    ] {
        assert!(bad.apply(&mut s.clone()).is_err(), "{bad:?}");
    }
}

#[test]
fn scenario_tolerances_apply_per_check() {
    let text = format!("{}\n[tolerances]\nlorentz_covariance_l = 0.0\n", fixture_text("scaled"));
    let report = run_checks(&with_points(&text, 2)).unwrap();
    let l: Vec<_> = report
        .records
        .iter()
        .filter(|r| r.check == "lorentz_covariance_l")
        .collect();
    assert!(l.iter().all(|r| r.tolerance == Some(0.0) && !r.pass));
    let r: Vec<_> = report
        .records
        .iter()
        .filter(|r| r.check == "lorentz_covariance_r")
        .collect();
    assert!(r.iter().all(|r| r.tolerance == Some(1e-7) && r.pass));
}

#[test]
fn unsupported_named_check_is_a_recorded_failure() {
    let mut s = with_points(&fixture_text("u1"), 2);
    s.checks = CheckSelection::Named(vec!["coordinate_gamma".into(), "u1_admissibility".into()]);
    let report = run_checks(&s).unwrap();
    assert_eq!(
        report.summary,
        Summary {
            total: 4,
            passed: 2,
            failed: 2
        }
    );
    let failed = report.records.iter().find(|r| !r.pass).unwrap();
    assert!(failed.diagnostic.as_deref().unwrap().contains("[coordinate_map]"));
    assert!(failed.residual.is_none());
}

#[test]
fn evaluation_errors_become_failed_records() {
    // Valid at the point itself, but the derivative stencils cross x = 0.
    let text = MINIMAL.replace(
        r#"s1 = ["0", "1", "0", "0"]"#,
        r#"s1 = ["0", "1 + 0.1*log(x)", "0", "0"]"#,
    );
    let mut s = parse_scenario(&text, "x").unwrap();
    s.sampling.points = 0;
    s.sampling.explicit = vec![qframe::Point::new([0.0, 2e-5, 0.0, 0.0])];
    s.checks = CheckSelection::Named(vec!["metric_realness".into(), "minimality".into()]);
    let report = run_checks(&s).unwrap();
    assert_eq!(
        report.summary,
        Summary {
            total: 2,
            passed: 1,
            failed: 1
        }
    );
    let failed = &report.records[1];
    assert_eq!(failed.check, "minimality");
    assert!(failed.residual.is_none() && failed.diagnostic.is_some());
}

#[test]
fn text_table_flags_failures() {
    let mut s = with_points(&fixture_text("flat"), 1);
    s.tolerance_override = Some(0.0);
    let text = run_checks(&s).unwrap().to_text();
    assert!(text
        .lines()
        .any(|l| l.starts_with("FAIL") && l.contains("lorentz_covariance_l")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("ok") && l.contains("metric_realness")));
    assert!(text.trim_end().ends_with("failed"));
}

// --- the binary -----------------------------------------------------------

fn wrong_jacobian(dir: &Path) -> PathBuf {
    let text = fixture_text("torsion").replace(r#"["1 + 0.2*t", "0", "0", "0"]"#, r#"["1 + 0.2*t", "0.5", "0", "0"]"#);
    let path = dir.join("wrong.scn");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let flat = scenarios_dir().join("flat.scn");
    let ok = qframe(&["run", "--scenario", flat.to_str().unwrap(), "--points", "3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad = wrong_jacobian(dir.path());
    let json = dir.path().join("out.json");
    let out = qframe(&[
        "run",
        "--scenario",
        bad.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let flagged: Vec<_> = stdout.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert!(!flagged.is_empty());
    assert!(flagged
        .iter()
        .all(|l| l.contains("jacobian_consistency") || l.contains("coordinate_gamma")));
    let report: Report = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.summary.failed, flagged.len());
    assert_eq!(report.summary, Summary::of(&report.records));
}

#[test]
fn json_to_stdout_replaces_the_table() {
    let u1 = scenarios_dir().join("u1.scn");
    let out = qframe(&[
        "run",
        "--scenario",
        u1.to_str().unwrap(),
        "--json",
        "-",
        "--points",
        "2",
        "--checks",
        "u1_admissibility",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.summary.total, 2);
}

#[test]
fn binary_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenarios_dir().join("lorentz_u1.scn");
    let run = |name: &str| {
        let out = dir.path().join(name);
        qframe(&[
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--json",
            out.to_str().unwrap(),
            "--seed",
            "11",
        ]);
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let flat = scenarios_dir().join("flat.scn");
    let flat = flat.to_str().unwrap();
    assert_eq!(qframe(&["run"]).status.code(), Some(2));
    assert_eq!(qframe(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        qframe(&["run", "--scenario", flat, "--fd-order", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qframe(&["run", "--scenario", flat, "--checks", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qframe(&["run", "--scenario", flat, "--fd-step", "0"]).status.code(),
        Some(2)
    );
    let broken = dir.path().join("broken.scn");
    std::fs::write(&broken, "[chart\n").unwrap();
    let out = qframe(&["validate", "--scenario", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.scn"));
}

#[test]
fn validate_and_list_checks() {
    let out = qframe(&[
        "validate",
        "--scenario",
        scenarios_dir().join("scaled.scn").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "scaled: ok (25 sample points)"
    );

    // Validation does not run checks, so a wrong Jacobian still validates.
    let dir = tempfile::tempdir().unwrap();
    let out = qframe(&["validate", "--scenario", wrong_jacobian(dir.path()).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let out = qframe(&["list-checks"]);
    assert_eq!(out.status.code(), Some(0));
    let listed = String::from_utf8_lossy(&out.stdout);
    assert_eq!(listed.lines().count(), CHECKS.len());
    for c in CHECKS {
        assert!(listed.contains(c.name));
    }
}
