//! Scenario files: a TOML document describing a spacetime (chart, basis,
//! gauge connection), optional transformations, sample points and numerics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qframe::fields::{parse_expr, FdOrder};
use qframe::gauge::GaugeError;
use qframe::geometry::{self, GeometryError};
use qframe::transform::TransformError;
use qframe::{
    AlgebraError, BasisField, BiquatField, Chart, CoordinateMap, FdConfig, FieldError, FieldExpr, FieldRef,
    GaugeConnection, LorentzField, Point, ScalarRef, Tolerance, U1Field,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::checks::find_check;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("{location} (line {line}, column {column}): {message}")]
    Expression {
        location: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("invariant violated at point {point:?}: {message}")]
    Invariant { point: [f64; 4], message: String },
    #[error("could not find {wanted} sample points where every field evaluates ({last})")]
    Sampling { wanted: usize, last: String },
}

type Expr = Spanned<String>;
type Quad = [Expr; 4];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    scenario: Option<RawMeta>,
    chart: RawChart,
    basis: RawBasis,
    connection: Option<RawConnection>,
    lorentz: Option<RawLorentz>,
    u1: Option<RawU1>,
    coordinate_map: Option<RawMap>,
    fields: Option<RawFields>,
    sampling: Option<RawSampling>,
    numerics: Option<RawNumerics>,
    checks: Option<RawChecks>,
    tolerances: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    name: Option<String>,
    description: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    coordinates: [String; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    s0: Quad,
    s1: Quad,
    s2: Quad,
    s3: Quad,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    coupling: Option<f64>,
    w0: Option<Quad>,
    w1: Option<Quad>,
    w2: Option<Quad>,
    w3: Option<Quad>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLorentz {
    generator: Quad,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawU1 {
    phi: Expr,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    forward: Quad,
    jacobian: [Quad; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFields {
    psi_l: Option<Quad>,
    psi_r: Option<Quad>,
    vector: Option<Quad>,
    vector_components: Option<Quad>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    seed: Option<u64>,
    points: Option<usize>,
    box_min: Option<[f64; 4]>,
    box_max: Option<[f64; 4]>,
    explicit: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    fd_step: Option<f64>,
    fd_order: Option<u32>,
    tol_abs: Option<f64>,
    tol_rel: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecks {
    run: RunSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RunSpec {
    Keyword(String),
    List(Vec<String>),
}

pub const DEFAULT_POINTS: usize = 25;
pub const DEFAULT_SEED: u64 = 0;

const DEFAULT_PSI_L: [&str; 4] = ["cos(t) + 0.3*im*x", "sin(y)", "0.2*im*exp(z)", "0.5"];
const DEFAULT_PSI_R: [&str; 4] = ["1 + 0.2*im*sin(x)", "0.3*t", "cos(z)", "im*sin(y)"];
const DEFAULT_VECTOR: [&str; 4] = ["im*cosh(0.3*t)", "sin(x)", "0.4*y", "0.2*im*z + 0.1"];
const DEFAULT_COMPONENTS: [&str; 4] = ["sin(t)", "x^2", "cos(y)", "0.5*z"];

/// Which checks a run should evaluate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckSelection {
    /// Every check the scenario supports.
    All,
    Named(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    pub seed: u64,
    pub points: usize,
    pub box_min: [f64; 4],
    pub box_max: [f64; 4],
    pub explicit: Vec<Point>,
}

/// Fields the species covariance checks act on.
#[derive(Clone)]
pub struct SpeciesFields {
    pub psi_l: FieldRef,
    pub psi_r: FieldRef,
    pub vector: FieldRef,
    pub vector_components: [ScalarRef; 4],
}

/// A fully parsed scenario.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub chart: Chart,
    pub basis: BasisField,
    pub omega: GaugeConnection,
    pub lorentz: Option<LorentzField>,
    pub u1: Option<U1Field>,
    pub coordinate_map: Option<CoordinateMap>,
    pub fields: SpeciesFields,
    pub sampling: Sampling,
    pub fd: FdConfig,
    pub tol: Tolerance,
    pub checks: CheckSelection,
    pub tolerances: BTreeMap<String, f64>,
    /// Replaces every check tolerance when set (the `--tol` flag).
    pub tolerance_override: Option<f64>,
    /// The scenario document as JSON, echoed into reports.
    pub echo: serde_json::Value,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("sampling", &self.sampling)
            .field("fd", &self.fd)
            .field("checks", &self.checks)
            .finish_non_exhaustive()
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

struct Parser<'a> {
    text: &'a str,
    chart: Chart,
}

impl Parser<'_> {
    fn expr(&self, e: &Expr, location: &str) -> Result<FieldExpr, ScenarioError> {
        parse_expr(e.get_ref(), &self.chart).map_err(|err| {
            // The span starts at the opening quote.
            let (line, column) = line_col(self.text, e.span().start + 1 + err.position());
            ScenarioError::Expression {
                location: location.to_string(),
                line,
                column,
                message: err.to_string(),
            }
        })
    }

    fn quad(&self, q: &Quad, location: &str) -> Result<BiquatField, ScenarioError> {
        let mut out = Vec::with_capacity(4);
        for (k, e) in q.iter().enumerate() {
            out.push(self.expr(e, &format!("{location}[{k}]"))?);
        }
        let arr: [FieldExpr; 4] = out.try_into().expect("four components");
        Ok(BiquatField::new(arr))
    }

    fn quad_or(&self, q: Option<&Quad>, default: [&str; 4], location: &str) -> Result<BiquatField, ScenarioError> {
        match q {
            Some(q) => self.quad(q, location),
            None => {
                let parsed = BiquatField::parse(default, &self.chart).map_err(|e| ScenarioError::Invalid {
                    location: location.to_string(),
                    message: format!("default field does not fit this chart: {e}"),
                })?;
                Ok(parsed)
            }
        }
    }

    fn scalars(&self, q: Option<&Quad>, default: [&str; 4], location: &str) -> Result<[ScalarRef; 4], ScenarioError> {
        let f = self.quad_or(q, default, location)?;
        Ok(f.components().clone().map(|e| Arc::new(e) as ScalarRef))
    }
}

fn invalid(location: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        location: location.to_string(),
        message: message.into(),
    }
}

/// Parse a scenario document. No field is evaluated here; see
/// [`Scenario::sample_points`] for load-time validation.
pub fn parse_scenario(text: &str, default_name: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    let table: toml::Table = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    let echo = serde_json::to_value(&table).map_err(|e| ScenarioError::Syntax(e.to_string()))?;

    let chart = Chart::new(raw.chart.coordinates.clone()).map_err(|e| invalid("chart.coordinates", e.to_string()))?;
    let p = Parser {
        text,
        chart: chart.clone(),
    };

    let numerics = raw.numerics.as_ref();
    let tol = Tolerance {
        abs: numerics.and_then(|n| n.tol_abs).unwrap_or(1e-12),
        rel: numerics.and_then(|n| n.tol_rel).unwrap_or(1e-12),
    };
    if !tol.is_valid() {
        return Err(invalid("numerics", "tolerances must be finite and non-negative"));
    }
    let step = numerics.and_then(|n| n.fd_step).unwrap_or(1e-4);
    let order_num = numerics.and_then(|n| n.fd_order).unwrap_or(4);
    let order = FdOrder::from_u32(order_num).ok_or_else(|| invalid("numerics.fd_order", "must be 2 or 4"))?;
    let fd = FdConfig::new(step, order);
    if !fd.is_valid() {
        return Err(invalid("numerics.fd_step", "must be finite and positive"));
    }

    let b = &raw.basis;
    let basis = BasisField::new([
        p.quad(&b.s0, "basis.s0")?.into_ref(),
        p.quad(&b.s1, "basis.s1")?.into_ref(),
        p.quad(&b.s2, "basis.s2")?.into_ref(),
        p.quad(&b.s3, "basis.s3")?.into_ref(),
    ])
    .with_tolerance(tol);

    let zero = ["0"; 4];
    let conn = raw.connection.as_ref();
    let coupling = conn.and_then(|c| c.coupling).unwrap_or(1.0);
    if !coupling.is_finite() {
        return Err(invalid("connection.coupling", "must be finite"));
    }
    let omega = GaugeConnection::new(
        [
            p.quad_or(conn.and_then(|c| c.w0.as_ref()), zero, "connection.w0")?
                .into_ref(),
            p.quad_or(conn.and_then(|c| c.w1.as_ref()), zero, "connection.w1")?
                .into_ref(),
            p.quad_or(conn.and_then(|c| c.w2.as_ref()), zero, "connection.w2")?
                .into_ref(),
            p.quad_or(conn.and_then(|c| c.w3.as_ref()), zero, "connection.w3")?
                .into_ref(),
        ],
        coupling,
    )
    .with_tolerance(tol);

    let lorentz = match &raw.lorentz {
        Some(l) => Some(LorentzField::new(p.quad(&l.generator, "lorentz.generator")?.into_ref()).with_tolerance(tol)),
        None => None,
    };
    let u1 = match &raw.u1 {
        Some(u) => Some(U1Field::new(Arc::new(p.expr(&u.phi, "u1.phi")?)).with_tolerance(tol)),
        None => None,
    };
    let coordinate_map = match &raw.coordinate_map {
        Some(m) => {
            let forward = p.scalars(Some(&m.forward), zero, "coordinate_map.forward")?;
            let mut rows = Vec::with_capacity(4);
            for (r, row) in m.jacobian.iter().enumerate() {
                rows.push(p.scalars(Some(row), zero, &format!("coordinate_map.jacobian[{r}]"))?);
            }
            let jacobian: [[ScalarRef; 4]; 4] = rows.try_into().unwrap_or_else(|_| unreachable!());
            Some(CoordinateMap::new(forward, jacobian).with_tolerance(tol))
        }
        None => None,
    };

    let f = raw.fields.as_ref();
    let fields = SpeciesFields {
        psi_l: p
            .quad_or(f.and_then(|f| f.psi_l.as_ref()), DEFAULT_PSI_L, "fields.psi_l")?
            .into_ref(),
        psi_r: p
            .quad_or(f.and_then(|f| f.psi_r.as_ref()), DEFAULT_PSI_R, "fields.psi_r")?
            .into_ref(),
        vector: p
            .quad_or(f.and_then(|f| f.vector.as_ref()), DEFAULT_VECTOR, "fields.vector")?
            .into_ref(),
        vector_components: p.scalars(
            f.and_then(|f| f.vector_components.as_ref()),
            DEFAULT_COMPONENTS,
            "fields.vector_components",
        )?,
    };

    let s = raw.sampling.as_ref();
    let sampling = Sampling {
        seed: s.and_then(|s| s.seed).unwrap_or(DEFAULT_SEED),
        points: s.and_then(|s| s.points).unwrap_or(DEFAULT_POINTS),
        box_min: s.and_then(|s| s.box_min).unwrap_or([-1.0; 4]),
        box_max: s.and_then(|s| s.box_max).unwrap_or([1.0; 4]),
        explicit: s
            .and_then(|s| s.explicit.clone())
            .unwrap_or_default()
            .into_iter()
            .map(Point::new)
            .collect(),
    };
    for k in 0..4 {
        let (lo, hi) = (sampling.box_min[k], sampling.box_max[k]);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid(
                "sampling",
                format!("box bounds for coordinate {k} are not an interval"),
            ));
        }
    }
    if sampling.explicit.iter().any(|p| !p.is_finite()) {
        return Err(invalid("sampling.explicit", "points must be finite"));
    }

    let checks = match raw.checks.map(|c| c.run) {
        None => CheckSelection::All,
        Some(RunSpec::Keyword(k)) if k == "all" => CheckSelection::All,
        Some(RunSpec::Keyword(k)) => CheckSelection::Named(vec![k]),
        Some(RunSpec::List(l)) => CheckSelection::Named(l),
    };
    if let CheckSelection::Named(names) = &checks {
        check_names(names, "checks.run")?;
    }
    let tolerances = raw.tolerances.unwrap_or_default();
    for (name, t) in &tolerances {
        let location = format!("tolerances.{name}");
        match find_check(name) {
            None => return Err(invalid(&location, "no check by this name")),
            Some(def) if def.tolerance.is_none() => {
                return Err(invalid(&location, "diagnostic checks have no tolerance"))
            }
            Some(_) => {}
        }
        if !(t.is_finite() && *t >= 0.0) {
            return Err(invalid(&location, "must be finite and non-negative"));
        }
    }

    let name = raw
        .scenario
        .as_ref()
        .and_then(|m| m.name.clone())
        .unwrap_or_else(|| default_name.to_string());
    let description = raw.scenario.and_then(|m| m.description).unwrap_or_default();

    Ok(Scenario {
        name,
        description,
        chart,
        basis,
        omega,
        lorentz,
        u1,
        coordinate_map,
        fields,
        sampling,
        fd,
        tol,
        checks,
        tolerances,
        tolerance_override: None,
        echo,
    })
}

fn check_names(names: &[String], location: &str) -> Result<(), ScenarioError> {
    match names.iter().find(|n| find_check(n).is_none()) {
        Some(n) => Err(invalid(location, format!("unknown check `{n}`"))),
        None => Ok(()),
    }
}

/// Command-line replacements for scenario settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub fd_step: Option<f64>,
    pub fd_order: Option<u32>,
    pub tolerance: Option<f64>,
    pub checks: Option<Vec<String>>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<(), ScenarioError> {
        if let Some(seed) = self.seed {
            s.sampling.seed = seed;
        }
        if let Some(n) = self.points {
            s.sampling.points = n;
        }
        if let Some(h) = self.fd_step {
            s.fd.step = [h; 4];
        }
        if let Some(o) = self.fd_order {
            s.fd.order = FdOrder::from_u32(o).ok_or_else(|| invalid("--fd-order", "must be 2 or 4"))?;
        }
        if !s.fd.is_valid() {
            return Err(invalid("--fd-step", "must be finite and positive"));
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid("--tol", "must be finite and non-negative"));
            }
            s.tolerance_override = Some(t);
        }
        if let Some(names) = &self.checks {
            if names.iter().any(|n| n == "all") {
                s.checks = CheckSelection::All;
            } else {
                check_names(names, "--checks")?;
                s.checks = CheckSelection::Named(names.clone());
            }
        }
        Ok(())
    }
}

/// Read, parse and validate a scenario file at its own sample points.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let scenario = parse_scenario(&text, stem)?;
    scenario.sample_points()?;
    Ok(scenario)
}

/// Why a point was refused.
enum PointProblem {
    /// A field cannot be evaluated there; random sampling tries elsewhere.
    Domain(String),
    /// A module invariant fails; the scenario itself is invalid.
    Invariant(String),
}

fn classify_field(e: FieldError) -> PointProblem {
    match e {
        FieldError::NotReal(_) => PointProblem::Invariant(e.to_string()),
        other => PointProblem::Domain(other.to_string()),
    }
}

fn classify_geometry(e: GeometryError) -> PointProblem {
    match e {
        GeometryError::Field(f) => classify_field(f),
        other => PointProblem::Invariant(other.to_string()),
    }
}

fn classify_gauge(e: GaugeError) -> PointProblem {
    match e {
        GaugeError::Field(f) => classify_field(f),
        GaugeError::Geometry(g) => classify_geometry(g),
        other => PointProblem::Invariant(other.to_string()),
    }
}

fn classify_transform(e: TransformError) -> PointProblem {
    match e {
        TransformError::Field(f) => classify_field(f),
        TransformError::Geometry(g) => classify_geometry(g),
        TransformError::Gauge(g) => classify_gauge(g),
        other => PointProblem::Invariant(other.to_string()),
    }
}

impl Scenario {
    fn check_point(&self, p: &Point) -> Result<(), PointProblem> {
        geometry::metric_at(&self.basis, p).map_err(classify_geometry)?;
        qframe::gauge::decompose_omega(&self.omega, p).map_err(classify_gauge)?;
        if let Some(l) = &self.lorentz {
            l.lambda_at(p).map_err(|e| match e {
                TransformError::Algebra(AlgebraError::NonVectorGenerator { .. }) => {
                    PointProblem::Invariant(format!("lorentz.generator: {e}"))
                }
                other => classify_transform(other),
            })?;
        }
        if let Some(u) = &self.u1 {
            u.phase_at(p).map_err(classify_field)?;
        }
        if let Some(m) = &self.coordinate_map {
            m.inverse_jacobian_at(p).map_err(classify_transform)?;
            for f in m.forward() {
                f.eval(p).map_err(classify_field)?;
            }
        }
        for f in [&self.fields.psi_l, &self.fields.psi_r, &self.fields.vector] {
            f.eval(p).map_err(classify_field)?;
        }
        for c in &self.fields.vector_components {
            c.eval(p).map_err(classify_field)?;
        }
        Ok(())
    }

    /// The sample points for a run: the explicit list followed by seeded
    /// uniform draws from the box. Random draws where some field cannot be
    /// evaluated are replaced; invariant violations are errors.
    pub fn sample_points(&self) -> Result<Vec<Point>, ScenarioError> {
        let mut out = Vec::with_capacity(self.sampling.explicit.len() + self.sampling.points);
        for p in &self.sampling.explicit {
            match self.check_point(p) {
                Ok(()) => out.push(*p),
                Err(PointProblem::Domain(message)) | Err(PointProblem::Invariant(message)) => {
                    return Err(ScenarioError::Invariant { point: p.x, message })
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.sampling.seed);
        let budget = 100 * self.sampling.points.max(1);
        let mut accepted = 0;
        let mut last = String::new();
        for _ in 0..budget {
            if accepted == self.sampling.points {
                break;
            }
            let p = Point::new(std::array::from_fn(|k| {
                let (lo, hi) = (self.sampling.box_min[k], self.sampling.box_max[k]);
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                }
            }));
            match self.check_point(&p) {
                Ok(()) => {
                    out.push(p);
                    accepted += 1;
                }
                Err(PointProblem::Domain(message)) => last = message,
                Err(PointProblem::Invariant(message)) => return Err(ScenarioError::Invariant { point: p.x, message }),
            }
        }
        if accepted < self.sampling.points {
            return Err(ScenarioError::Sampling {
                wanted: self.sampling.points,
                last,
            });
        }
        Ok(out)
    }
}
