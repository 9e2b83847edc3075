//! Metric structure built from a biquaternion basis `s_μ ∈ (C⊗H)^-`.
//!
//! Index conventions used throughout the crate:
//!
//! * connection coefficients are stored as `gamma[μ][ν][ρ] = Γ^μ_{νρ}`, the
//!   derivative index last, so that `∇_ρ s_ν = ∂_ρ s_ν - Γ^μ_{νρ} s_μ`;
//! * contravariant indices pick up `+Γ^a_{σρ}`, covariant ones `-Γ^σ_{bρ}`;
//! * torsion is `torsion[ρ][μ][ν] = Γ^ρ_{μν} - Γ^ρ_{νμ}`.

use nalgebra::Matrix4;
use thiserror::Error;

use crate::algebra::{Biquaternion, Tolerance};
use crate::fields::{self, FdConfig, FieldError, FieldRef, Point, ScalarRef};
use crate::gauge::GaugeConnection;

pub type Rank2 = [[f64; 4]; 4];
pub type Rank3 = [[[f64; 4]; 4]; 4];
pub type Rank4 = [[[[f64; 4]; 4]; 4]; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("basis field s_{index} is not in the minus part (plus part of size {plus:e})")]
    NotMinusPart { index: usize, plus: f64 },
    #[error("metric is degenerate (det g = {det:e})")]
    DegenerateMetric { det: f64 },
    #[error("metric has imaginary residue {0:e}")]
    MetricNotReal(f64),
    #[error("connection coefficients have imaginary residue {residue:e} (limit {limit:e})")]
    ConnectionNotReal { residue: f64, limit: f64 },
    #[error("tensor field has {found} components, expected {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Four basis fields `s_0..s_3`, each required to lie in `(C⊗H)^-`.
#[derive(Clone)]
pub struct BasisField {
    s: [FieldRef; 4],
    tol: Tolerance,
}

impl BasisField {
    pub fn new(s: [FieldRef; 4]) -> Self {
        Self {
            s,
            tol: Tolerance::default(),
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn fields(&self) -> &[FieldRef; 4] {
        &self.s
    }

    /// Basis values at `p`, each checked against the minus-part condition.
    pub fn at(&self, p: &Point) -> Result<[Biquaternion; 4], GeometryError> {
        let mut out = [Biquaternion::ZERO; 4];
        for (index, f) in self.s.iter().enumerate() {
            let v = f.eval(p)?;
            let (_, plus) = v.pm_split();
            let size = plus.max_abs();
            if !self.tol.accepts(size, v.max_abs()) {
                return Err(GeometryError::NotMinusPart { index, plus: size });
            }
            out[index] = v;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub point: Point,
    /// `g_{μν} = ⟨s_μ, s_ν⟩`, exactly symmetric.
    pub g: Matrix4<f64>,
    pub inverse: Matrix4<f64>,
    pub det: f64,
    /// Largest `|Im⟨s_μ, s_ν⟩|` discarded while building `g`.
    pub imag_residue: f64,
}

impl MetricSample {
    pub fn as_array(&self) -> Rank2 {
        std::array::from_fn(|m| std::array::from_fn(|n| self.g[(m, n)]))
    }

    /// `max |g_{μν} g^{νσ} - δ_μ^σ|`.
    pub fn roundtrip_residual(&self) -> f64 {
        (self.g * self.inverse - Matrix4::identity()).abs().max()
    }

    pub fn inverse_array(&self) -> Rank2 {
        std::array::from_fn(|m| std::array::from_fn(|n| self.inverse[(m, n)]))
    }
}

fn metric_from_values(s: &[Biquaternion; 4], p: &Point, tol: Tolerance) -> Result<MetricSample, GeometryError> {
    let mut g = Matrix4::zeros();
    let mut imag_residue: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for m in 0..4 {
        for n in m..4 {
            let z = s[m].inner(&s[n]);
            imag_residue = imag_residue.max(z.im.abs());
            scale = scale.max(z.re.abs());
            g[(m, n)] = z.re;
            g[(n, m)] = z.re;
        }
    }
    if !tol.accepts(imag_residue, scale) {
        return Err(GeometryError::MetricNotReal(imag_residue));
    }
    let det = g.determinant();
    if det.abs() <= tol.bound(scale.powi(4)) {
        return Err(GeometryError::DegenerateMetric { det });
    }
    let inverse = g.try_inverse().ok_or(GeometryError::DegenerateMetric { det })?;
    Ok(MetricSample {
        point: *p,
        g,
        inverse,
        det,
        imag_residue,
    })
}

/// `g_{μν} = ⟨s_μ, s_ν⟩` at `p`.
pub fn metric_at(basis: &BasisField, p: &Point) -> Result<MetricSample, GeometryError> {
    let s = basis.at(p)?;
    metric_from_values(&s, p, basis.tol)
}

/// Everything the pointwise formulas need at one point: the basis, its dual
/// `s^μ = g^{μν} s_ν` and the metric.
#[derive(Debug, Clone)]
pub struct Frame {
    pub point: Point,
    pub s: [Biquaternion; 4],
    pub dual: [Biquaternion; 4],
    pub metric: MetricSample,
}

impl Frame {
    pub fn from_values(s: [Biquaternion; 4], p: &Point, tol: Tolerance) -> Result<Self, GeometryError> {
        let metric = metric_from_values(&s, p, tol)?;
        let dual = raise(&metric.inverse, &s);
        Ok(Self {
            point: *p,
            s,
            dual,
            metric,
        })
    }

    /// Largest deviation of `⟨s^μ, s_ν⟩` from `δ^μ_ν`.
    pub fn dual_pairing_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                let delta = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((self.dual[m].inner(&self.s[n]) - delta).norm());
            }
        }
        worst
    }
}

fn raise(inverse: &Matrix4<f64>, s: &[Biquaternion; 4]) -> [Biquaternion; 4] {
    std::array::from_fn(|m| (0..4).map(|n| s[n] * inverse[(m, n)]).sum())
}

pub fn frame_at(basis: &BasisField, p: &Point) -> Result<Frame, GeometryError> {
    Frame::from_values(basis.at(p)?, p, basis.tol)
}

/// The dual basis `s^μ = g^{μν} s_ν`, obeying `⟨s^μ, s_ν⟩ = δ^μ_ν`.
pub fn dual_basis_at(basis: &BasisField, p: &Point) -> Result<[Biquaternion; 4], GeometryError> {
    Ok(frame_at(basis, p)?.dual)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSample {
    pub point: Point,
    /// `gamma[μ][ν][ρ] = Γ^μ_{νρ}`.
    pub gamma: Rank3,
    pub imag_residue: f64,
}

impl ConnectionSample {
    pub fn zero(point: Point) -> Self {
        Self {
            point,
            gamma: [[[0.0; 4]; 4]; 4],
            imag_residue: 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().flatten().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// `∂_ρ s_ν` for all `ρ, ν`: `ds[ρ][ν]`.
pub fn basis_derivatives(
    basis: &BasisField,
    p: &Point,
    fd: &FdConfig,
) -> Result<[[Biquaternion; 4]; 4], GeometryError> {
    let mut ds = [[Biquaternion::ZERO; 4]; 4];
    for (rho, row) in ds.iter_mut().enumerate() {
        *row = fields::derivative(|q| basis.at(q), rho, p, fd)?;
    }
    Ok(ds)
}

/// `Γ^μ_{νρ} = ⟨s^μ, ∂_ρ s_ν + ω_ρ s_ν + s_ν ω̄*_ρ⟩` from pointwise data.
///
/// Returns the real parts and the largest discarded imaginary part.
pub fn minimal_gamma_from_parts(frame: &Frame, ds: &[[Biquaternion; 4]; 4], omega: &[Biquaternion; 4]) -> (Rank3, f64) {
    let mut gamma = [[[0.0; 4]; 4]; 4];
    let mut imag: f64 = 0.0;
    for rho in 0..4 {
        let w = omega[rho];
        let wbs = w.bar_star();
        for nu in 0..4 {
            let x = ds[rho][nu] + w * frame.s[nu] + frame.s[nu] * wbs;
            for mu in 0..4 {
                let z = frame.dual[mu].inner(&x);
                gamma[mu][nu][rho] = z.re;
                imag = imag.max(z.im.abs());
            }
        }
    }
    (gamma, imag)
}

/// Bound on the imaginary residue of `Γ` that rounding and the stencil can
/// produce from basis values that individually pass the minus-part check.
fn realness_limit(frame: &Frame, tol: Tolerance, fd: &FdConfig) -> f64 {
    let h_min = fd.step.iter().cloned().fold(f64::INFINITY, f64::min);
    let dual = frame.dual.iter().map(|d| d.max_abs()).fold(0.0, f64::max);
    let s = frame.s.iter().map(|d| d.max_abs()).fold(0.0, f64::max);
    let scale = (1.0 + dual) * (1.0 + s);
    tol.bound(scale) * (1.0 + 2.0 / h_min) * 16.0
}

/// The minimal connection coefficients at `p`.
pub fn gamma_minimal_at(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<ConnectionSample, GeometryError> {
    let frame = frame_at(basis, p)?;
    let ds = basis_derivatives(basis, p, fd)?;
    let w = omega.at(p)?;
    let (gamma, imag_residue) = minimal_gamma_from_parts(&frame, &ds, &w);
    let limit = realness_limit(&frame, basis.tol, fd);
    // NaN fails too.
    if imag_residue.is_nan() || imag_residue > limit {
        return Err(GeometryError::ConnectionNotReal {
            residue: imag_residue,
            limit,
        });
    }
    Ok(ConnectionSample {
        point: *p,
        gamma,
        imag_residue,
    })
}

/// The Christoffel symbols of the metric `⟨s_μ, s_ν⟩`, stored in the same
/// `[ρ][μ][ν]` layout as [`ConnectionSample::gamma`]. Diagnostic only.
pub fn christoffel_at(basis: &BasisField, p: &Point, fd: &FdConfig) -> Result<ConnectionSample, GeometryError> {
    let metric = metric_at(basis, p)?;
    let mut dg = [[[0.0; 4]; 4]; 4];
    for (k, slot) in dg.iter_mut().enumerate() {
        *slot = fields::derivative(|q| Ok::<_, GeometryError>(metric_at(basis, q)?.as_array()), k, p, fd)?;
    }
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for rho in 0..4 {
        for mu in 0..4 {
            for nu in 0..4 {
                gamma[rho][mu][nu] = 0.5
                    * (0..4)
                        .map(|sig| metric.inverse[(rho, sig)] * (dg[mu][sig][nu] + dg[nu][mu][sig] - dg[sig][mu][nu]))
                        .sum::<f64>();
            }
        }
    }
    Ok(ConnectionSample {
        point: *p,
        gamma,
        imag_residue: metric.imag_residue,
    })
}

/// `Γ^ρ_{μν} - Γ^ρ_{νμ}`, stored as `[ρ][μ][ν]`.
pub fn torsion_at(gamma: &ConnectionSample) -> Rank3 {
    let g = &gamma.gamma;
    std::array::from_fn(|r| std::array::from_fn(|m| std::array::from_fn(|n| g[r][m][n] - g[r][n][m])))
}

/// How a quaternionic field transforms under `Λ`, which fixes how `ω`
/// enters its covariant derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    /// `ψ' = Λ ψ`; couples as `+ω ψ`.
    LeftSpinor,
    /// `ψ' = ψ Λ̄*`; couples as `+ψ ω̄*`.
    RightSpinor,
    /// `V' = Λ V Λ̄*`; couples as `+ω V + V ω̄*`.
    Vector,
    /// `S' = S`; no coupling.
    Scalar,
}

impl Species {
    /// The `ω` coupling term for a value `f`.
    pub fn coupling(self, w: Biquaternion, f: Biquaternion) -> Biquaternion {
        match self {
            Species::LeftSpinor => w * f,
            Species::RightSpinor => f * w.bar_star(),
            Species::Vector => w * f + f * w.bar_star(),
            Species::Scalar => Biquaternion::ZERO,
        }
    }
}

/// Species plus the number of contravariant and covariant coordinate indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpeciesTag {
    pub species: Species,
    pub upper: usize,
    pub lower: usize,
}

impl SpeciesTag {
    pub const fn new(species: Species, upper: usize, lower: usize) -> Self {
        Self { species, upper, lower }
    }

    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }

    pub fn component_count(&self) -> usize {
        4usize.pow(self.rank() as u32)
    }
}

/// A tensor-valued quaternionic field. Components are stored row-major over
/// the index list `(ρ_1..ρ_m, σ_1..σ_n)`, contravariant indices first.
#[derive(Clone)]
pub struct TensorField {
    tag: SpeciesTag,
    components: Vec<FieldRef>,
}

impl TensorField {
    pub fn new(tag: SpeciesTag, components: Vec<FieldRef>) -> Result<Self, GeometryError> {
        if components.len() != tag.component_count() {
            return Err(GeometryError::RankMismatch {
                expected: tag.component_count(),
                found: components.len(),
            });
        }
        Ok(Self { tag, components })
    }

    pub fn scalar_rank0(species: Species, f: FieldRef) -> Self {
        Self {
            tag: SpeciesTag::new(species, 0, 0),
            components: vec![f],
        }
    }

    /// The basis itself: a vector-species field with one covariant index.
    pub fn basis(basis: &BasisField) -> Self {
        Self {
            tag: SpeciesTag::new(Species::Vector, 0, 1),
            components: basis.s.to_vec(),
        }
    }

    pub fn tag(&self) -> SpeciesTag {
        self.tag
    }

    pub fn components(&self) -> &[FieldRef] {
        &self.components
    }

    pub fn values_at(&self, p: &Point) -> Result<Vec<Biquaternion>, FieldError> {
        self.components.iter().map(|f| f.eval(p)).collect()
    }
}

fn digits(mut flat: usize, rank: usize) -> Vec<usize> {
    let mut out = vec![0; rank];
    for slot in (0..rank).rev() {
        out[slot] = flat % 4;
        flat /= 4;
    }
    out
}

fn flatten(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &d| acc * 4 + d)
}

/// Applies the `Γ` terms of `∇_ρ` to pointwise values and derivatives of a
/// tensor-valued field. Shared with the transformation engine.
pub fn nabla_from_parts(
    tag: SpeciesTag,
    values: &[Biquaternion],
    derivs: &[Biquaternion],
    gamma: &Rank3,
    rho: usize,
) -> Vec<Biquaternion> {
    let rank = tag.rank();
    (0..values.len())
        .map(|flat| {
            let idx = digits(flat, rank);
            let mut acc = derivs[flat];
            for slot in 0..rank {
                let mut j = idx.clone();
                for sigma in 0..4 {
                    j[slot] = sigma;
                    let v = values[flatten(&j)];
                    if slot < tag.upper {
                        acc += v * gamma[idx[slot]][sigma][rho];
                    } else {
                        acc -= v * gamma[sigma][idx[slot]][rho];
                    }
                }
            }
            acc
        })
        .collect()
}

/// `D_ρ f` for every component of a tensor-valued field, using the supplied
/// connection coefficients for the coordinate indices and `ω` for the
/// species coupling.
pub fn covariant_derivative_at(
    field: &TensorField,
    rho: usize,
    omega: &GaugeConnection,
    gamma: &ConnectionSample,
    p: &Point,
    fd: &FdConfig,
) -> Result<Vec<Biquaternion>, GeometryError> {
    let values = field.values_at(p)?;
    let derivs: Vec<Biquaternion> = field
        .components
        .iter()
        .map(|f| fields::partial(f.as_ref(), rho, p, fd))
        .collect::<Result<_, _>>()?;
    let w = omega.field_at(rho, p)?;
    let nabla = nabla_from_parts(field.tag, &values, &derivs, &gamma.gamma, rho);
    Ok(nabla
        .into_iter()
        .zip(&values)
        .map(|(n, v)| n + field.tag.species.coupling(w, *v))
        .collect())
}

/// `∇_ρ g_{μν} = ∂_ρ g_{μν} - Γ^σ_{μρ} g_{σν} - Γ^σ_{νρ} g_{μσ}` with the
/// minimal `Γ`, stored as `[ρ][μ][ν]`. Vanishes for admissible `ω`.
pub fn nabla_metric_residual(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<Rank3, GeometryError> {
    let gamma = gamma_minimal_at(basis, omega, p, fd)?;
    nabla_metric_with(basis, &gamma, p, fd)
}

fn nabla_metric_with(
    basis: &BasisField,
    gamma: &ConnectionSample,
    p: &Point,
    fd: &FdConfig,
) -> Result<Rank3, GeometryError> {
    let metric = metric_at(basis, p)?;
    let g = metric.as_array();
    let gm = &gamma.gamma;
    let mut out = [[[0.0; 4]; 4]; 4];
    for (rho, slot) in out.iter_mut().enumerate() {
        let dg = fields::derivative(|q| Ok::<_, GeometryError>(metric_at(basis, q)?.as_array()), rho, p, fd)?;
        for mu in 0..4 {
            for nu in 0..4 {
                let mut v = dg[mu][nu];
                for sig in 0..4 {
                    v -= gm[sig][mu][rho] * g[sig][nu] + gm[sig][nu][rho] * g[mu][sig];
                }
                slot[mu][nu] = v;
            }
        }
    }
    Ok(out)
}

/// `⟨D_ρ s_μ, s_ν⟩ + ⟨s_μ, D_ρ s_ν⟩ - ∇_ρ g_{μν}` for an arbitrary connection
/// `gamma` (not necessarily the minimal one), stored as `[ρ][μ][ν]`.
///
/// For admissible `ω` the `ω` terms drop out and the two sides agree up to
/// finite-difference error, which is the statement `D_ρ g = ∇_ρ g`.
pub fn metric_leibniz_residual(
    basis: &BasisField,
    omega: &GaugeConnection,
    gamma: &ConnectionSample,
    p: &Point,
    fd: &FdConfig,
) -> Result<Rank3, GeometryError> {
    let s = basis.at(p)?;
    let nabla_g = nabla_metric_with(basis, gamma, p, fd)?;
    let field = TensorField::basis(basis);
    let mut out = [[[0.0; 4]; 4]; 4];
    for (rho, slot) in out.iter_mut().enumerate() {
        let ds = covariant_derivative_at(&field, rho, omega, gamma, p, fd)?;
        for mu in 0..4 {
            for nu in 0..4 {
                let dg = ds[mu].inner(&s[nu]) + s[mu].inner(&ds[nu]);
                slot[mu][nu] = (dg - nabla_g[rho][mu][nu]).norm();
            }
        }
    }
    Ok(out)
}

/// Residuals `|⟨s^μ, D_ρ V⟩ - (∂_ρ V^μ + Γ^μ_{νρ} V^ν)|` indexed `[μ][ρ]`
/// for the vector field `V = V^μ s_μ`.
pub fn component_identity_check(
    components: &[ScalarRef; 4],
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<Rank2, GeometryError> {
    let gamma = gamma_minimal_at(basis, omega, p, fd)?;
    let frame = frame_at(basis, p)?;
    let v_field: FieldRef = {
        let comps = components.clone();
        let basis = basis.clone();
        fields::field_fn(move |q| {
            let s = basis.at(q).map_err(|e| FieldError::Other(e.to_string()))?;
            let mut v = Biquaternion::ZERO;
            for (c, sv) in comps.iter().zip(s) {
                v += sv * c.eval(q)?;
            }
            Ok(v)
        })
    };
    let v_tensor = TensorField::scalar_rank0(Species::Vector, v_field);
    let vals: Vec<_> = components.iter().map(|c| c.eval(p)).collect::<Result<_, _>>()?;
    let mut out = [[0.0; 4]; 4];
    for rho in 0..4 {
        let dv = covariant_derivative_at(&v_tensor, rho, omega, &gamma, p, fd)?[0];
        for mu in 0..4 {
            let lhs = frame.dual[mu].inner(&dv);
            let mut rhs = fields::partial_scalar(components[mu].as_ref(), rho, p, fd)?;
            for nu in 0..4 {
                rhs += vals[nu] * gamma.gamma[mu][nu][rho];
            }
            out[mu][rho] = (lhs - rhs).norm();
        }
    }
    Ok(out)
}

pub fn max_abs3(a: &Rank3) -> f64 {
    a.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs2(a: &Rank2) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}
