//! The named checks a scenario run can evaluate, and the runner.

use std::fmt::Display;

use qframe::gauge;
use qframe::geometry::{self, max_abs2, max_abs3, TensorField};
use qframe::transform::{self, CovarianceInputs, CovarianceKind, Transformation};
use qframe::{FdConfig, Point};
use rayon::prelude::*;

use crate::report::{Record, Report, Settings, Summary};
use crate::scenario::{CheckSelection, Scenario, ScenarioError};

/// Optional scenario sections a check depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    None,
    Lorentz,
    U1,
    CoordinateMap,
}

impl Requirement {
    fn met_by(self, s: &Scenario) -> bool {
        match self {
            Requirement::None => true,
            Requirement::Lorentz => s.lorentz.is_some(),
            Requirement::U1 => s.u1.is_some(),
            Requirement::CoordinateMap => s.coordinate_map.is_some(),
        }
    }

    fn section(self) -> &'static str {
        match self {
            Requirement::None => "",
            Requirement::Lorentz => "[lorentz]",
            Requirement::U1 => "[u1]",
            Requirement::CoordinateMap => "[coordinate_map]",
        }
    }
}

type Eval = fn(&Context, &Point) -> Result<f64, String>;

pub struct CheckDef {
    pub name: &'static str,
    pub description: &'static str,
    /// `None` marks a diagnostic: the value is reported but never fails.
    pub tolerance: Option<f64>,
    pub requires: Requirement,
    eval: Eval,
}

/// Everything a check needs, built once per run.
pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub fd: FdConfig,
    inputs: CovarianceInputs,
    lorentz: Option<Transformation>,
    u1: Option<Transformation>,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Self {
            scenario,
            fd: scenario.fd,
            inputs: CovarianceInputs {
                basis: scenario.basis.clone(),
                omega: scenario.omega.clone(),
                psi_l: scenario.fields.psi_l.clone(),
                psi_r: scenario.fields.psi_r.clone(),
                vector: scenario.fields.vector.clone(),
            },
            lorentz: scenario.lorentz.clone().map(|l| Transformation::Local(l.into_ref())),
            u1: scenario.u1.clone().map(Transformation::U1),
        }
    }

    fn covariance(&self, kind: CovarianceKind, tr: &Option<Transformation>, p: &Point) -> Result<f64, String> {
        let tr = tr.as_ref().ok_or("transformation missing")?;
        transform::covariance_residual(kind, &self.inputs, tr, p, &self.fd).map_err(err)
    }
}

fn err<E: Display>(e: E) -> String {
    e.to_string()
}

macro_rules! check {
    ($name:literal, $tol:expr, $req:ident, $desc:literal, $eval:expr) => {
        CheckDef {
            name: $name,
            description: $desc,
            tolerance: $tol,
            requires: Requirement::$req,
            eval: $eval,
        }
    };
}

/// Every check, in report order.
pub static CHECKS: &[CheckDef] = &[
    check!(
        "basis_minus_part",
        Some(1e-12),
        None,
        "plus part of each s_μ",
        |c, p| {
            let mut worst: f64 = 0.0;
            for f in c.scenario.basis.fields() {
                worst = worst.max(f.eval(p).map_err(err)?.pm_split().1.max_abs());
            }
            Ok(worst)
        }
    ),
    check!(
        "metric_realness",
        Some(1e-13),
        None,
        "max |Im⟨s_μ, s_ν⟩|",
        |c, p| { Ok(geometry::metric_at(&c.scenario.basis, p).map_err(err)?.imag_residue) }
    ),
    check!(
        "dual_pairing",
        Some(1e-10),
        None,
        "⟨s^μ, s_ν⟩ - δ^μ_ν",
        |c, p| {
            Ok(geometry::frame_at(&c.scenario.basis, p)
                .map_err(err)?
                .dual_pairing_residual())
        }
    ),
    check!(
        "raise_lower_roundtrip",
        Some(1e-12),
        None,
        "g_{μν} g^{νσ} - δ",
        |c, p| {
            Ok(geometry::metric_at(&c.scenario.basis, p)
                .map_err(err)?
                .roundtrip_residual())
        }
    ),
    check!(
        "gamma_realness",
        Some(1e-10),
        None,
        "max |Im Γ| before it is discarded",
        |c, p| {
            Ok(
                geometry::gamma_minimal_at(&c.scenario.basis, &c.scenario.omega, p, &c.fd)
                    .map_err(err)?
                    .imag_residue,
            )
        }
    ),
    check!(
        "minimality",
        Some(1e-8),
        None,
        "max |D_ρ s_ν| with the minimal Γ",
        |c, p| {
            let s = c.scenario;
            let gamma = geometry::gamma_minimal_at(&s.basis, &s.omega, p, &c.fd).map_err(err)?;
            let field = TensorField::basis(&s.basis);
            let mut worst: f64 = 0.0;
            for rho in 0..4 {
                for d in geometry::covariant_derivative_at(&field, rho, &s.omega, &gamma, p, &c.fd).map_err(err)? {
                    worst = worst.max(d.magnitude());
                }
            }
            Ok(worst)
        }
    ),
    check!(
        "metric_compatibility",
        Some(1e-8),
        None,
        "max |∇_ρ g_{μν}|",
        |c, p| {
            let r = geometry::nabla_metric_residual(&c.scenario.basis, &c.scenario.omega, p, &c.fd).map_err(err)?;
            Ok(max_abs3(&r))
        }
    ),
    check!(
        "dg_equals_nabla_g",
        Some(1e-8),
        None,
        "⟨D s_μ, s_ν⟩ + ⟨s_μ, D s_ν⟩ - ∇g for the Christoffel connection",
        |c, p| {
            let s = c.scenario;
            let chris = geometry::christoffel_at(&s.basis, p, &c.fd).map_err(err)?;
            let r = geometry::metric_leibniz_residual(&s.basis, &s.omega, &chris, p, &c.fd).map_err(err)?;
            Ok(max_abs3(&r))
        }
    ),
    check!(
        "component_identity",
        Some(1e-8),
        None,
        "⟨s^μ, D_ρ V⟩ - (∂_ρ V^μ + Γ^μ_{νρ} V^ν)",
        |c, p| {
            let s = c.scenario;
            let r = geometry::component_identity_check(&s.fields.vector_components, &s.basis, &s.omega, p, &c.fd)
                .map_err(err)?;
            Ok(max_abs2(&r))
        }
    ),
    check!("torsion_norm", None, None, "max |T^ρ_{μν}| (diagnostic)", |c, p| {
        let g = geometry::gamma_minimal_at(&c.scenario.basis, &c.scenario.omega, p, &c.fd).map_err(err)?;
        Ok(max_abs3(&geometry::torsion_at(&g)))
    }),
    check!(
        "christoffel_difference",
        None,
        None,
        "max |Γ - Christoffel| (diagnostic)",
        |c, p| {
            let s = c.scenario;
            let g = geometry::gamma_minimal_at(&s.basis, &s.omega, p, &c.fd).map_err(err)?;
            let chris = geometry::christoffel_at(&s.basis, p, &c.fd).map_err(err)?;
            let mut worst: f64 = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    for r in 0..4 {
                        worst = worst.max((g.gamma[m][n][r] - chris.gamma[m][n][r]).abs());
                    }
                }
            }
            Ok(worst)
        }
    ),
    check!(
        "omega_admissible",
        Some(1e-12),
        None,
        "max |Scal(ω_μ + ω̄*_μ)|",
        |c, p| { gauge::check_omega_condition(&c.scenario.omega, p).map_err(err) }
    ),
    check!(
        "omega_decomposition",
        Some(1e-12),
        None,
        "χ + i g A recomposes ω",
        |c, p| {
            let w = c.scenario.omega.at(p).map_err(err)?;
            let re = gauge::decompose_omega(&c.scenario.omega, p).map_err(err)?.recompose();
            Ok((0..4).map(|mu| re[mu].distance(&w[mu])).fold(0.0, f64::max))
        }
    ),
    check!(
        "strength_antisymmetry",
        Some(1e-13),
        None,
        "Ω_{ρσ} + Ω_{σρ}",
        |c, p| {
            let s = gauge::field_strength_at(&c.scenario.omega, &c.scenario.basis, p, &c.fd).map_err(err)?;
            Ok(s.antisymmetry_residual())
        }
    ),
    check!("strength_decomposition", Some(1e-12), None, "Ω - K - i g F", |c, p| {
        let s = gauge::field_strength_at(&c.scenario.omega, &c.scenario.basis, p, &c.fd).map_err(err)?;
        let k_scalar = s.k.iter().flatten().map(|k| k.scalar_part().norm()).fold(0.0, f64::max);
        Ok(s.decomposition_residual().max(k_scalar))
    }),
    check!("torsion_f_term", Some(1e-7), None, "F - (∂A - ∂A) - T A", |c, p| {
        gauge::torsion_f_residual(&c.scenario.omega, &c.scenario.basis, p, &c.fd).map_err(err)
    }),
    check!(
        "riemann_antisymmetry",
        Some(1e-9),
        None,
        "R^μ_{νρσ} + R^μ_{νσρ}",
        |c, p| {
            let r = gauge::riemann_at(&c.scenario.basis, &c.scenario.omega, p, &c.fd).map_err(err)?;
            Ok(r.antisymmetry_residual())
        }
    ),
    check!(
        "riemann_cross_check",
        Some(1e-6),
        None,
        "∂Γ curvature against ⟨s^μ, [∇_ρ, ∇_σ] s_ν⟩",
        |c, p| { gauge::riemann_cross_check(&c.scenario.basis, &c.scenario.omega, p, &c.fd).map_err(err) }
    ),
    check!(
        "field_strength_relation",
        Some(1e-7),
        None,
        "[∇_ρ, ∇_σ] s_μ + Ω s_μ + s_μ Ω̄*",
        |c, p| { gauge::strength_relation_residual(&c.scenario.basis, &c.scenario.omega, p, &c.fd).map_err(err) }
    ),
    check!(
        "lagrangian_eh",
        Some(1e-6),
        None,
        "curvature contraction against -2 Re⟨s^μ s̄^ν, Ω_{μν}⟩",
        |c, p| {
            Ok(gauge::lagrangian_eh_at(&c.scenario.basis, &c.scenario.omega, p, &c.fd)
                .map_err(err)?
                .residual())
        }
    ),
    check!(
        "lagrangian_quadratic",
        Some(1e-10),
        None,
        "Re⟨Ω, Ω⟩ - (Re⟨K, K⟩ - g² F F)",
        |c, p| {
            Ok(
                gauge::lagrangian_quadratic_at(&c.scenario.basis, &c.scenario.omega, p, &c.fd)
                    .map_err(err)?
                    .residual(),
            )
        }
    ),
    check!("lorentz_unit", Some(1e-12), Lorentz, "|N(Λ) - 1|", |c, p| {
        let l = c.scenario.lorentz.as_ref().ok_or("no generator")?;
        Ok(transform::lorentz_unit_residual(&l.lambda_at(p).map_err(err)?))
    }),
    check!("lorentz_metric_invariance", Some(1e-11), Lorentz, "g' - g", |c, p| {
        c.covariance(CovarianceKind::Metric, &c.lorentz, p)
    }),
    check!("lorentz_gamma_invariance", Some(1e-8), Lorentz, "Γ' - Γ", |c, p| {
        c.covariance(CovarianceKind::Gamma, &c.lorentz, p)
    }),
    check!(
        "lorentz_covariance_l",
        Some(1e-7),
        Lorentz,
        "(D ψ_L)' - Λ D ψ_L",
        |c, p| { c.covariance(CovarianceKind::Left, &c.lorentz, p) }
    ),
    check!(
        "lorentz_covariance_r",
        Some(1e-7),
        Lorentz,
        "(D ψ_R)' - D ψ_R Λ̄*",
        |c, p| { c.covariance(CovarianceKind::Right, &c.lorentz, p) }
    ),
    check!(
        "lorentz_covariance_v",
        Some(1e-7),
        Lorentz,
        "(D V)' - Λ D V Λ̄*",
        |c, p| { c.covariance(CovarianceKind::Vector, &c.lorentz, p) }
    ),
    check!(
        "u1_admissibility",
        Some(1e-12),
        U1,
        "ω - i∂φ satisfies the scalar condition",
        |c, p| {
            let u = c.scenario.u1.as_ref().ok_or("no phase")?;
            let primed = transform::u1_transform_connection(&c.scenario.omega, u, &c.fd);
            gauge::check_omega_condition(&primed, p).map_err(err)
        }
    ),
    check!(
        "u1_covariance_l",
        Some(1e-8),
        U1,
        "(D ψ_L)' - e^{iφ} D ψ_L",
        |c, p| { c.covariance(CovarianceKind::Left, &c.u1, p) }
    ),
    check!(
        "u1_covariance_r",
        Some(1e-8),
        U1,
        "(D ψ_R)' - e^{-iφ} D ψ_R",
        |c, p| { c.covariance(CovarianceKind::Right, &c.u1, p) }
    ),
    check!(
        "u1_vector_invariance",
        Some(1e-10),
        U1,
        "D V unchanged by the phase",
        |c, p| { c.covariance(CovarianceKind::VectorU1, &c.u1, p) }
    ),
    check!(
        "u1_unified_reduction",
        Some(1e-10),
        U1,
        "unified law with Λ = e^{iφ} against ω - i∂φ",
        |c, p| {
            let u = c.scenario.u1.as_ref().ok_or("no phase")?;
            transform::u1_unified_reduction(&c.scenario.omega, u, p, &c.fd).map_err(err)
        }
    ),
    check!(
        "jacobian_consistency",
        Some(1e-8),
        CoordinateMap,
        "supplied J against ∂x'/∂x",
        |c, p| {
            let m = c.scenario.coordinate_map.as_ref().ok_or("no map")?;
            transform::jacobian_consistency(m, p, &c.fd).map_err(err)
        }
    ),
    check!(
        "coordinate_gamma",
        Some(1e-6),
        CoordinateMap,
        "Γ' against the connection transformation law",
        |c, p| {
            let s = c.scenario;
            let m = s.coordinate_map.as_ref().ok_or("no map")?;
            Ok(transform::coordinate_gamma_check(&s.basis, &s.omega, m, p, &c.fd)
                .map_err(err)?
                .residual())
        }
    ),
];

pub fn find_check(name: &str) -> Option<&'static CheckDef> {
    CHECKS.iter().find(|c| c.name == name)
}

impl CheckDef {
    /// Tolerance after scenario and command-line overrides.
    pub fn tolerance_for(&self, scenario: &Scenario) -> Option<f64> {
        let base = self.tolerance?;
        Some(
            scenario
                .tolerance_override
                .or_else(|| scenario.tolerances.get(self.name).copied())
                .unwrap_or(base),
        )
    }

    pub fn evaluate(&self, ctx: &Context, p: &Point) -> Result<f64, String> {
        (self.eval)(ctx, p)
    }
}

enum Job {
    Run(&'static CheckDef),
    Unsupported(String, Requirement),
}

fn selected_jobs(scenario: &Scenario) -> Result<Vec<Job>, ScenarioError> {
    match &scenario.checks {
        CheckSelection::All => Ok(CHECKS
            .iter()
            .filter(|c| c.requires.met_by(scenario))
            .map(Job::Run)
            .collect()),
        CheckSelection::Named(names) => {
            let mut seen = std::collections::BTreeSet::new();
            let mut jobs = Vec::new();
            for name in names {
                if !seen.insert(name.as_str()) {
                    continue;
                }
                let def = find_check(name).ok_or_else(|| ScenarioError::Invalid {
                    location: "checks".into(),
                    message: format!("unknown check `{name}`"),
                })?;
                jobs.push(if def.requires.met_by(scenario) {
                    Job::Run(def)
                } else {
                    Job::Unsupported(name.clone(), def.requires)
                });
            }
            Ok(jobs)
        }
    }
}

/// Evaluate every selected check at every sample point.
pub fn run_checks(scenario: &Scenario) -> Result<Report, ScenarioError> {
    let points = scenario.sample_points()?;
    let jobs = selected_jobs(scenario)?;
    let ctx = Context::new(scenario);

    let pairs: Vec<(&Job, &Point)> = jobs.iter().flat_map(|j| points.iter().map(move |p| (j, p))).collect();
    let records: Vec<Record> = pairs
        .par_iter()
        .map(|(job, p)| match job {
            Job::Run(def) => {
                let tolerance = def.tolerance_for(scenario);
                match def.evaluate(&ctx, p) {
                    Ok(r) if r.is_finite() => Record {
                        check: def.name.to_string(),
                        point: p.x,
                        residual: Some(r),
                        tolerance,
                        pass: tolerance.is_none_or(|t| r <= t),
                        diagnostic: None,
                    },
                    Ok(r) => Record::failed(def.name, p.x, tolerance, format!("non-finite residual {r}")),
                    Err(e) => Record::failed(def.name, p.x, tolerance, e),
                }
            }
            Job::Unsupported(name, req) => {
                Record::failed(name, p.x, None, format!("scenario has no {} section", req.section()))
            }
        })
        .collect();

    let summary = Summary::of(&records);
    Ok(Report {
        tool: "qframe".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        name: scenario.name.clone(),
        scenario: scenario.echo.clone(),
        settings: Settings::of(scenario),
        records,
        summary,
    })
}
