//! Local Lorentz and U(1) transformations, and general coordinate changes.
//!
//! A local transformation is a biquaternion field `Λ(x)` with `|N(Λ)| = 1`.
//! Lorentz transformations have `N(Λ) = 1`; the U(1) phase `e^{iφ}` has
//! `N = e^{2iφ}`. The laws are
//!
//! ```text
//! s' = Λ s Λ̄*    ψ_L' = Λ ψ_L    ψ_R' = ψ_R Λ̄*    V' = Λ V Λ̄*    S' = S
//! ω' = Λ ω Λ⁻¹ - (∂Λ) Λ⁻¹
//! ```

use std::sync::Arc;

use nalgebra::Matrix4;
use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{AlgebraError, Biquaternion, Tolerance};
use crate::fields::{self, BiquatSource, FdConfig, FieldError, FieldRef, Point, ScalarRef};
use crate::gauge::{GaugeConnection, GaugeError};
use crate::geometry::{
    self, minimal_gamma_from_parts, BasisField, ConnectionSample, Frame, GeometryError, Rank2, Rank3, Species,
    TensorField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("transformation is not admissible: |N(Λ)| - 1 = {residual:e}")]
    NotAdmissible { residual: f64 },
    #[error("Jacobian is singular (det = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("Jacobian entry ({row}, {col}) is not real (imaginary part {imag:e})")]
    JacobianNotReal { row: usize, col: usize, imag: f64 },
    #[error("{0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<TransformError> for FieldError {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::Field(f) => f,
            other => FieldError::Other(other.to_string()),
        }
    }
}

/// `|N(Λ) - 1|`: zero exactly for Lorentz transformations.
pub fn lorentz_unit_residual(lambda: &Biquaternion) -> f64 {
    (lambda.norm() - 1.0).norm()
}

/// `||N(Λ)| - 1|`: zero for every admissible transformation.
pub fn admissibility_residual(lambda: &Biquaternion) -> f64 {
    (lambda.norm().norm() - 1.0).abs()
}

/// `Λ = exp(generator)` for a vector-valued generator field.
#[derive(Clone)]
pub struct LorentzField {
    generator: FieldRef,
    tol: Tolerance,
}

impl LorentzField {
    pub fn new(generator: FieldRef) -> Self {
        Self {
            generator,
            tol: Tolerance::default(),
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn lambda_at(&self, p: &Point) -> Result<Biquaternion, TransformError> {
        Ok(self.generator.eval(p)?.exp_vec(self.tol)?)
    }

    pub fn into_ref(self) -> FieldRef {
        Arc::new(self)
    }
}

impl BiquatSource for LorentzField {
    fn eval(&self, p: &Point) -> Result<Biquaternion, FieldError> {
        Ok(self.lambda_at(p)?)
    }
}

/// The U(1) phase `Λ = e^{iφ}` for a real field `φ`.
#[derive(Clone)]
pub struct U1Field {
    phi: ScalarRef,
    tol: Tolerance,
}

impl U1Field {
    pub fn new(phi: ScalarRef) -> Self {
        Self {
            phi,
            tol: Tolerance::default(),
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn phase(&self) -> &ScalarRef {
        &self.phi
    }

    pub fn phase_at(&self, p: &Point) -> Result<f64, FieldError> {
        let z = self.phi.eval(p)?;
        if !self.tol.accepts(z.im.abs(), z.re.abs()) {
            return Err(FieldError::NotReal(z.im));
        }
        Ok(z.re)
    }

    pub fn into_ref(self) -> FieldRef {
        Arc::new(self)
    }
}

impl BiquatSource for U1Field {
    fn eval(&self, p: &Point) -> Result<Biquaternion, FieldError> {
        let phi = self.phase_at(p)?;
        Ok(Biquaternion::scalar(Complex64::new(0.0, phi).exp()))
    }
}

fn checked_lambda(lambda: &FieldRef, p: &Point, tol: Tolerance) -> Result<Biquaternion, TransformError> {
    let l = lambda.eval(p)?;
    let residual = admissibility_residual(&l);
    if !tol.accepts(residual, 1.0) {
        return Err(TransformError::NotAdmissible { residual });
    }
    Ok(l)
}

/// Apply the transformation law of `species` to a single value.
pub fn act(species: Species, lambda: Biquaternion, value: Biquaternion) -> Biquaternion {
    match species {
        Species::LeftSpinor => lambda * value,
        Species::RightSpinor => value * lambda.bar_star(),
        Species::Vector => lambda * value * lambda.bar_star(),
        Species::Scalar => value,
    }
}

/// The transformed field `f'` for a field of the given species.
pub fn transform_field(f: &FieldRef, species: Species, lambda: &FieldRef, tol: Tolerance) -> FieldRef {
    let f = f.clone();
    let lambda = lambda.clone();
    fields::field_fn(move |q| {
        let l = checked_lambda(&lambda, q, tol)?;
        Ok(act(species, l, f.eval(q)?))
    })
}

pub fn transform_tensor(field: &TensorField, lambda: &FieldRef, tol: Tolerance) -> TensorField {
    let tag = field.tag();
    let comps = field
        .components()
        .iter()
        .map(|c| transform_field(c, tag.species, lambda, tol))
        .collect();
    TensorField::new(tag, comps).expect("component count is preserved")
}

/// `s'_μ = Λ s_μ Λ̄*`.
pub fn transform_basis(basis: &BasisField, lambda: &FieldRef) -> BasisField {
    let tol = basis.tolerance();
    BasisField::new(std::array::from_fn(|mu| {
        transform_field(&basis.fields()[mu], Species::Vector, lambda, tol)
    }))
    .with_tolerance(tol)
}

/// `ω'_μ = Λ ω_μ Λ⁻¹ - (∂_μ Λ) Λ⁻¹`, with `∂_μ Λ` by finite differences.
pub fn transform_connection(omega: &GaugeConnection, lambda: &FieldRef, fd: &FdConfig) -> GaugeConnection {
    let tol = omega.tolerance();
    let fd = *fd;
    let fields: [FieldRef; 4] = std::array::from_fn(|mu| {
        let w = omega.fields()[mu].clone();
        let lambda = lambda.clone();
        fields::field_fn(move |q| {
            let l = checked_lambda(&lambda, q, tol)?;
            let inv = l.inverse(tol).map_err(TransformError::from)?;
            let dl = fields::partial(lambda.as_ref(), mu, q, &fd)?;
            Ok(l * w.eval(q)? * inv - dl * inv)
        })
    });
    GaugeConnection::new(fields, omega.coupling()).with_tolerance(tol)
}

/// `ω'_μ = ω_μ - i ∂_μ φ`, the U(1) law written directly in terms of `φ`.
pub fn u1_transform_connection(omega: &GaugeConnection, phi: &U1Field, fd: &FdConfig) -> GaugeConnection {
    let fd = *fd;
    let fields: [FieldRef; 4] = std::array::from_fn(|mu| {
        let w = omega.fields()[mu].clone();
        let phi = phi.clone();
        fields::field_fn(move |q| {
            let dphi = fields::derivative(|r| phi.phase_at(r), mu, q, &fd)?;
            Ok(w.eval(q)? - Biquaternion::scalar(Complex64::new(0.0, dphi)))
        })
    });
    GaugeConnection::new(fields, omega.coupling()).with_tolerance(omega.tolerance())
}

/// The transformation to test covariance against.
#[derive(Clone)]
pub enum Transformation {
    /// A general admissible `Λ(x)`; `ω` transforms by the unified law.
    Local(FieldRef),
    /// A U(1) phase; `ω` transforms by `ω - i ∂φ`.
    U1(U1Field),
}

impl Transformation {
    pub fn lambda(&self) -> FieldRef {
        match self {
            Transformation::Local(l) => l.clone(),
            Transformation::U1(u) => u.clone().into_ref(),
        }
    }

    fn connection(&self, omega: &GaugeConnection, fd: &FdConfig) -> GaugeConnection {
        match self {
            Transformation::Local(l) => transform_connection(omega, l, fd),
            Transformation::U1(u) => u1_transform_connection(omega, u, fd),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// `(D ψ_L)' = Λ D ψ_L`
    Left,
    /// `(D ψ_R)' = D ψ_R Λ̄*`
    Right,
    /// `(D V)' = Λ D V Λ̄*`
    Vector,
    /// `g' = g`
    Metric,
    /// `Γ' = Γ`
    Gamma,
    /// `D V` unchanged under a U(1) phase.
    VectorU1,
}

/// The fields a covariance check acts on.
#[derive(Clone)]
pub struct CovarianceInputs {
    pub basis: BasisField,
    pub omega: GaugeConnection,
    pub psi_l: FieldRef,
    pub psi_r: FieldRef,
    pub vector: FieldRef,
}

fn rank0_derivatives(
    f: &FieldRef,
    species: Species,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<[Biquaternion; 4], TransformError> {
    let field = TensorField::scalar_rank0(species, f.clone());
    let gamma = ConnectionSample::zero(*p);
    let mut out = [Biquaternion::ZERO; 4];
    for (rho, o) in out.iter_mut().enumerate() {
        *o = geometry::covariant_derivative_at(&field, rho, omega, &gamma, p, fd)?[0];
    }
    Ok(out)
}

/// Largest violation of the covariance statement `kind` at `p`.
pub fn covariance_residual(
    kind: CovarianceKind,
    inputs: &CovarianceInputs,
    transformation: &Transformation,
    p: &Point,
    fd: &FdConfig,
) -> Result<f64, TransformError> {
    let tol = inputs.basis.tolerance();
    let lambda = transformation.lambda();
    let omega_p = transformation.connection(&inputs.omega, fd);
    let l = checked_lambda(&lambda, p, tol)?;
    let species_case = |f: &FieldRef, species: Species| -> Result<f64, TransformError> {
        let before = rank0_derivatives(f, species, &inputs.omega, p, fd)?;
        let fp = transform_field(f, species, &lambda, tol);
        let after = rank0_derivatives(&fp, species, &omega_p, p, fd)?;
        Ok((0..4)
            .map(|rho| after[rho].distance(&act(species, l, before[rho])))
            .fold(0.0, f64::max))
    };
    match kind {
        CovarianceKind::Left => species_case(&inputs.psi_l, Species::LeftSpinor),
        CovarianceKind::Right => species_case(&inputs.psi_r, Species::RightSpinor),
        CovarianceKind::Vector => species_case(&inputs.vector, Species::Vector),
        CovarianceKind::VectorU1 => {
            if !matches!(transformation, Transformation::U1(_)) {
                return Err(TransformError::Unsupported("VectorU1 needs a U(1) transformation"));
            }
            species_case(&inputs.vector, Species::Vector)
        }
        CovarianceKind::Metric => {
            let before = geometry::metric_at(&inputs.basis, p)?;
            let after = geometry::metric_at(&transform_basis(&inputs.basis, &lambda), p)?;
            Ok((before.g - after.g).abs().max())
        }
        CovarianceKind::Gamma => {
            let before = geometry::gamma_minimal_at(&inputs.basis, &inputs.omega, p, fd)?;
            let after = geometry::gamma_minimal_at(&transform_basis(&inputs.basis, &lambda), &omega_p, p, fd)?;
            Ok(max_diff3(&before.gamma, &after.gamma))
        }
    }
}

/// `max_μ |ω'_μ(unified law with Λ = e^{iφ}) - (ω_μ - i ∂_μ φ)|`.
pub fn u1_unified_reduction(
    omega: &GaugeConnection,
    phi: &U1Field,
    p: &Point,
    fd: &FdConfig,
) -> Result<f64, TransformError> {
    let unified = transform_connection(omega, &phi.clone().into_ref(), fd).at(p)?;
    let direct = u1_transform_connection(omega, phi, fd).at(p)?;
    Ok((0..4).map(|mu| unified[mu].distance(&direct[mu])).fold(0.0, f64::max))
}

fn max_diff3(a: &Rank3, b: &Rank3) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                worst = worst.max((a[i][j][k] - b[i][j][k]).abs());
            }
        }
    }
    worst
}

/// A coordinate change `x → x'(x)` with its Jacobian `J^μ_ν = ∂x'^μ/∂x^ν`
/// supplied in closed form.
#[derive(Clone)]
pub struct CoordinateMap {
    forward: [ScalarRef; 4],
    jacobian: [[ScalarRef; 4]; 4],
    tol: Tolerance,
}

impl CoordinateMap {
    pub fn new(forward: [ScalarRef; 4], jacobian: [[ScalarRef; 4]; 4]) -> Self {
        Self {
            forward,
            jacobian,
            tol: Tolerance::default(),
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn forward(&self) -> &[ScalarRef; 4] {
        &self.forward
    }

    pub fn jacobian_at(&self, p: &Point) -> Result<Matrix4<f64>, TransformError> {
        let mut j = Matrix4::zeros();
        for row in 0..4 {
            for col in 0..4 {
                let z = self.jacobian[row][col].eval(p)?;
                if !self.tol.accepts(z.im.abs(), z.re.abs()) {
                    return Err(TransformError::JacobianNotReal { row, col, imag: z.im });
                }
                j[(row, col)] = z.re;
            }
        }
        Ok(j)
    }

    /// `(J⁻¹)^α_ν = ∂x^α/∂x'^ν` as an array.
    pub fn inverse_jacobian_at(&self, p: &Point) -> Result<Rank2, TransformError> {
        let j = self.jacobian_at(p)?;
        let det = j.determinant();
        let scale = j.abs().max().powi(4);
        if det.abs() <= self.tol.bound(scale) {
            return Err(TransformError::SingularJacobian { det });
        }
        let inv = j.try_inverse().ok_or(TransformError::SingularJacobian { det })?;
        Ok(std::array::from_fn(|a| std::array::from_fn(|b| inv[(a, b)])))
    }
}

/// `max |∂_ν x'^μ - J^μ_ν|` with the left side by finite differences.
pub fn jacobian_consistency(map: &CoordinateMap, p: &Point, fd: &FdConfig) -> Result<f64, TransformError> {
    let j = map.jacobian_at(p)?;
    let mut worst: f64 = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            let d = fields::partial_scalar(map.forward[mu].as_ref(), nu, p, fd)?;
            worst = worst.max((d - j[(mu, nu)]).norm());
        }
    }
    Ok(worst)
}

/// `Γ'` computed from the primed basis and connection, next to the
/// transformation-law prediction
/// `J^μ_α (J⁻¹)^β_ν (J⁻¹)^γ_ρ Γ^α_{βγ} + J^μ_α ∂'_ρ (J⁻¹)^α_ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateGammaSample {
    pub computed: Rank3,
    pub predicted: Rank3,
}

impl CoordinateGammaSample {
    pub fn residual(&self) -> f64 {
        max_diff3(&self.computed, &self.predicted)
    }
}

pub fn coordinate_gamma_check(
    basis: &BasisField,
    omega: &GaugeConnection,
    map: &CoordinateMap,
    p: &Point,
    fd: &FdConfig,
) -> Result<CoordinateGammaSample, TransformError> {
    // Primed components, still as functions of the unprimed coordinates.
    let primed_basis = |q: &Point| -> Result<[Biquaternion; 4], TransformError> {
        let m = map.inverse_jacobian_at(q)?;
        let s = basis.at(q)?;
        Ok(std::array::from_fn(|nu| (0..4).map(|a| s[a] * m[a][nu]).sum()))
    };
    let m = map.inverse_jacobian_at(p)?;
    let j = map.jacobian_at(p)?;

    // ∂_β of primed quantities, then ∂'_ρ = (J⁻¹)^β_ρ ∂_β.
    let mut d_s = [[Biquaternion::ZERO; 4]; 4];
    let mut d_m = [[[0.0; 4]; 4]; 4];
    for beta in 0..4 {
        d_s[beta] = fields::derivative(primed_basis, beta, p, fd)?;
        d_m[beta] = fields::derivative(|q| map.inverse_jacobian_at(q), beta, p, fd)?;
    }
    let ds_primed: [[Biquaternion; 4]; 4] =
        std::array::from_fn(|rho| std::array::from_fn(|nu| (0..4).map(|b| d_s[b][nu] * m[b][rho]).sum()));
    let w = omega.at(p)?;
    let w_primed: [Biquaternion; 4] = std::array::from_fn(|rho| (0..4).map(|a| w[a] * m[a][rho]).sum());
    let frame = Frame::from_values(primed_basis(p)?, p, basis.tolerance())?;
    let (computed, _) = minimal_gamma_from_parts(&frame, &ds_primed, &w_primed);

    let gamma = geometry::gamma_minimal_at(basis, omega, p, fd)?.gamma;
    let mut predicted = [[[0.0; 4]; 4]; 4];
    for mu in 0..4 {
        for nu in 0..4 {
            for rho in 0..4 {
                let mut v = 0.0;
                for a in 0..4 {
                    let mut inner = 0.0;
                    for b in 0..4 {
                        for c in 0..4 {
                            inner += m[b][nu] * m[c][rho] * gamma[a][b][c];
                        }
                        inner += m[b][rho] * d_m[b][a][nu];
                    }
                    v += j[(mu, a)] * inner;
                }
                predicted[mu][nu][rho] = v;
            }
        }
    }
    Ok(CoordinateGammaSample { computed, predicted })
}
