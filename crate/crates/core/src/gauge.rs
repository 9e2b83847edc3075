//! The biquaternion gauge connection `ω_μ`, its field strength and the
//! curvature built from the minimal connection.

use thiserror::Error;

use crate::algebra::{Biquaternion, Tolerance};
use crate::fields::{self, FdConfig, FieldError, FieldRef, Point};
use crate::geometry::{
    self, minimal_gamma_from_parts, torsion_at, BasisField, ConnectionSample, Frame, GeometryError, Rank2, Rank3, Rank4,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("ω_{index} violates Scal(ω + ω̄*) = 0 (residual {residual:e})")]
    Inadmissible { index: usize, residual: f64 },
    #[error("ω_{index} has an imaginary scalar part {imag:e} but the coupling is zero")]
    ZeroCoupling { index: usize, imag: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `ω_μ` for `μ = 0..3` together with the U(1) coupling `g`.
#[derive(Clone)]
pub struct GaugeConnection {
    omega: [FieldRef; 4],
    coupling: f64,
    tol: Tolerance,
}

impl GaugeConnection {
    pub fn new(omega: [FieldRef; 4], coupling: f64) -> Self {
        Self {
            omega,
            coupling,
            tol: Tolerance::default(),
        }
    }

    pub fn zero() -> Self {
        Self::new(std::array::from_fn(|_| fields::constant_field(Biquaternion::ZERO)), 1.0)
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn fields(&self) -> &[FieldRef; 4] {
        &self.omega
    }

    pub fn field_at(&self, mu: usize, p: &Point) -> Result<Biquaternion, FieldError> {
        self.omega[mu].eval(p)
    }

    /// All four components at `p`, unchecked.
    pub fn at(&self, p: &Point) -> Result<[Biquaternion; 4], FieldError> {
        let mut out = [Biquaternion::ZERO; 4];
        for (o, f) in out.iter_mut().zip(&self.omega) {
            *o = f.eval(p)?;
        }
        Ok(out)
    }

    /// All four components at `p`, each checked against `Scal(ω + ω̄*) = 0`.
    pub fn checked_at(&self, p: &Point) -> Result<[Biquaternion; 4], GaugeError> {
        let w = self.at(p)?;
        for (index, v) in w.iter().enumerate() {
            let residual = admissibility(v);
            if !self.tol.accepts(residual, v.max_abs()) {
                return Err(GaugeError::Inadmissible { index, residual });
            }
        }
        Ok(w)
    }
}

fn admissibility(w: &Biquaternion) -> f64 {
    (*w + w.bar_star()).scalar_part().norm()
}

/// `max_μ |Scal(ω_μ + ω̄*_μ)|` at `p`.
pub fn check_omega_condition(omega: &GaugeConnection, p: &Point) -> Result<f64, FieldError> {
    Ok(omega.at(p)?.iter().map(admissibility).fold(0.0, f64::max))
}

/// `ω_μ = χ_μ + i g A_μ` with `χ_μ` a vector and `A_μ` real.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaDecomposition {
    pub chi: [Biquaternion; 4],
    pub a: [f64; 4],
    pub coupling: f64,
}

impl OmegaDecomposition {
    pub fn recompose(&self) -> [Biquaternion; 4] {
        std::array::from_fn(|mu| {
            self.chi[mu] + Biquaternion::scalar(num_complex::Complex64::new(0.0, self.coupling * self.a[mu]))
        })
    }
}

fn decompose_values(w: &[Biquaternion; 4], coupling: f64, tol: Tolerance) -> Result<OmegaDecomposition, GaugeError> {
    let mut chi = [Biquaternion::ZERO; 4];
    let mut a = [0.0; 4];
    for mu in 0..4 {
        let (scal, vec) = w[mu].scal_vec_split();
        chi[mu] = vec;
        let imag = scal.scalar_part().im;
        if coupling == 0.0 {
            if !tol.accepts(imag.abs(), w[mu].max_abs()) {
                return Err(GaugeError::ZeroCoupling { index: mu, imag });
            }
        } else {
            a[mu] = imag / coupling;
        }
    }
    Ok(OmegaDecomposition { chi, a, coupling })
}

pub fn decompose_omega(omega: &GaugeConnection, p: &Point) -> Result<OmegaDecomposition, GaugeError> {
    let w = omega.checked_at(p)?;
    decompose_values(&w, omega.coupling, omega.tol)
}

/// Field strengths at one point, all indexed `[ρ][σ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthSample {
    pub point: Point,
    pub omega: [[Biquaternion; 4]; 4],
    pub k: [[Biquaternion; 4]; 4],
    pub f: Rank2,
    pub coupling: f64,
}

impl StrengthSample {
    /// `max |Ω_{ρσ} + Ω_{σρ}|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for s in 0..4 {
                worst = worst
                    .max((self.omega[r][s] + self.omega[s][r]).max_abs())
                    .max((self.k[r][s] + self.k[s][r]).max_abs())
                    .max((self.f[r][s] + self.f[s][r]).abs());
            }
        }
        worst
    }

    /// `max |Ω_{ρσ} - K_{ρσ} - i g F_{ρσ}|`.
    pub fn decomposition_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for s in 0..4 {
                let u1 = Biquaternion::scalar(num_complex::Complex64::new(0.0, self.coupling * self.f[r][s]));
                worst = worst.max((self.omega[r][s] - self.k[r][s] - u1).max_abs());
            }
        }
        worst
    }
}

/// Pointwise data shared by the curvature routes.
struct Local {
    frame: Frame,
    /// `ds[ρ][ν] = ∂_ρ s_ν`
    ds: [[Biquaternion; 4]; 4],
    gamma: Rank3,
    imag: f64,
}

fn local(basis: &BasisField, omega: &GaugeConnection, p: &Point, fd: &FdConfig) -> Result<Local, GaugeError> {
    let frame = geometry::frame_at(basis, p)?;
    let ds = geometry::basis_derivatives(basis, p, fd)?;
    let w = omega.at(p)?;
    let (gamma, imag) = minimal_gamma_from_parts(&frame, &ds, &w);
    Ok(Local { frame, ds, gamma, imag })
}

impl Local {
    /// `n[σ][μ] = ∇_σ s_μ = ∂_σ s_μ - Γ^τ_{μσ} s_τ`.
    fn nabla_s(&self) -> [[Biquaternion; 4]; 4] {
        std::array::from_fn(|sig| {
            std::array::from_fn(|mu| {
                let mut v = self.ds[sig][mu];
                for tau in 0..4 {
                    v -= self.frame.s[tau] * self.gamma[tau][mu][sig];
                }
                v
            })
        })
    }
}

/// `∂_ρ X_σ - ∂_σ X_ρ + T^τ_{ρσ} X_τ` for values `x` and derivatives
/// `dx[ρ][σ] = ∂_ρ X_σ`.
fn curl<T>(x: &[T; 4], dx: &[[T; 4]; 4], torsion: &Rank3, zero: T) -> [[T; 4]; 4]
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    std::array::from_fn(|r| {
        std::array::from_fn(|s| {
            if r == s {
                return zero;
            }
            let mut v = dx[r][s] - dx[s][r];
            for tau in 0..4 {
                v = v + x[tau] * torsion[tau][r][s];
            }
            v
        })
    })
}

/// `Ω_{ρσ} = ∇_ρ ω_σ - ∇_σ ω_ρ + [ω_ρ, ω_σ]`, and the same for `K` from
/// `χ`; `F_{ρσ} = ∇_ρ A_σ - ∇_σ A_ρ`. Covariant derivatives of the
/// form index use the minimal connection.
pub fn field_strength_at(
    omega: &GaugeConnection,
    basis: &BasisField,
    p: &Point,
    fd: &FdConfig,
) -> Result<StrengthSample, GaugeError> {
    let gamma = geometry::gamma_minimal_at(basis, omega, p, fd)?;
    let torsion = torsion_at(&gamma);
    let w = omega.checked_at(p)?;
    let dec = decompose_values(&w, omega.coupling, omega.tol)?;

    let mut dw = [[Biquaternion::ZERO; 4]; 4];
    let mut dchi = [[Biquaternion::ZERO; 4]; 4];
    let mut da = [[0.0; 4]; 4];
    for rho in 0..4 {
        dw[rho] = fields::derivative(|q| omega.at(q), rho, p, fd)?;
        dchi[rho] = fields::derivative(
            |q| Ok::<_, FieldError>(omega.at(q)?.map(|v| v.scal_vec_split().1)),
            rho,
            p,
            fd,
        )?;
        da[rho] = fields::derivative(
            |q| {
                let v = omega.at(q)?;
                Ok::<_, GaugeError>(decompose_values(&v, omega.coupling, omega.tol)?.a)
            },
            rho,
            p,
            fd,
        )?;
    }

    let mut om = curl(&w, &dw, &torsion, Biquaternion::ZERO);
    let mut k = curl(&dec.chi, &dchi, &torsion, Biquaternion::ZERO);
    let f = curl(&dec.a, &da, &torsion, 0.0);
    for r in 0..4 {
        for s in 0..4 {
            if r != s {
                om[r][s] += w[r].commutator(w[s]);
                k[r][s] += dec.chi[r].commutator(dec.chi[s]);
            }
        }
    }
    Ok(StrengthSample {
        point: *p,
        omega: om,
        k,
        f,
        coupling: omega.coupling,
    })
}

/// `max_{μν} |F_{μν} - (∂_μ A_ν - ∂_ν A_μ) - T^τ_{μν} A_τ|` with `F` read off
/// the scalar part of the full `Ω_{μν}` (commutators carry no scalar part), so
/// the two sides share no intermediate values.
pub fn torsion_f_residual(
    omega: &GaugeConnection,
    basis: &BasisField,
    p: &Point,
    fd: &FdConfig,
) -> Result<f64, GaugeError> {
    let strength = field_strength_at(omega, basis, p, fd)?;
    let gamma = geometry::gamma_minimal_at(basis, omega, p, fd)?;
    let torsion = torsion_at(&gamma);
    let a = decompose_omega(omega, p)?.a;
    let g = omega.coupling;
    let mut worst: f64 = 0.0;
    for mu in 0..4 {
        let dmu = fields::derivative(|q| Ok::<_, GaugeError>(decompose_omega(omega, q)?.a), mu, p, fd)?;
        for nu in 0..4 {
            let dnu = fields::derivative(|q| Ok::<_, GaugeError>(decompose_omega(omega, q)?.a[mu]), nu, p, fd)?;
            let mut expect = dmu[nu] - dnu;
            for tau in 0..4 {
                expect += torsion[tau][mu][nu] * a[tau];
            }
            // g F from Ω; with g = 0 there is no A and the scalar part must vanish.
            let gf = strength.omega[mu][nu].scalar_part().im;
            worst = worst.max((gf - g * expect).abs() / if g == 0.0 { 1.0 } else { g.abs() });
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub point: Point,
    /// `riemann[μ][ν][ρ][σ] = R^μ_{νρσ}`.
    pub riemann: Rank4,
    pub imag_residue: f64,
}

impl CurvatureSample {
    /// `max |R^μ_{νρσ} + R^μ_{νσρ}|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let r = &self.riemann;
        let mut worst: f64 = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        worst = worst.max((r[m][n][a][b] + r[m][n][b][a]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `R^μ_{νρσ} = ∂_ρ Γ^μ_{νσ} - ∂_σ Γ^μ_{νρ} + Γ^μ_{τρ} Γ^τ_{νσ} - Γ^μ_{τσ} Γ^τ_{νρ}`
/// for the minimal connection, with `∂Γ` taken by finite differences.
pub fn riemann_at(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<CurvatureSample, GaugeError> {
    let here = local(basis, omega, p, fd)?;
    let g = &here.gamma;
    let mut imag = here.imag;
    let mut dg = [[[[0.0; 4]; 4]; 4]; 4];
    for (rho, slot) in dg.iter_mut().enumerate() {
        *slot = fields::derivative(
            |q| {
                let l = local(basis, omega, q, fd)?;
                imag = imag.max(l.imag);
                Ok::<_, GaugeError>(l.gamma)
            },
            rho,
            p,
            fd,
        )?;
    }
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut v = dg[a][m][n][b] - dg[b][m][n][a];
                    for t in 0..4 {
                        v += g[m][t][a] * g[t][n][b] - g[m][t][b] * g[t][n][a];
                    }
                    r[m][n][a][b] = v;
                }
            }
        }
    }
    Ok(CurvatureSample {
        point: *p,
        riemann: r,
        imag_residue: imag,
    })
}

/// `[∇_ρ, ∇_σ] s_μ`, indexed `[μ][ρ][σ]`, computed by differencing
/// `∇_σ s_μ` itself and applying the full tensor derivative to it.
pub fn basis_commutator_at(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<[[[Biquaternion; 4]; 4]; 4], GaugeError> {
    let here = local(basis, omega, p, fd)?;
    let n = here.nabla_s();
    let g = &here.gamma;
    // nn[ρ][σ][μ] = ∇_ρ ∇_σ s_μ
    let mut nn = [[[Biquaternion::ZERO; 4]; 4]; 4];
    for rho in 0..4 {
        let dn = fields::derivative(
            |q| Ok::<_, GaugeError>(local(basis, omega, q, fd)?.nabla_s()),
            rho,
            p,
            fd,
        )?;
        for sig in 0..4 {
            for mu in 0..4 {
                let mut v = dn[sig][mu];
                for tau in 0..4 {
                    v -= n[tau][mu] * g[tau][sig][rho] + n[sig][tau] * g[tau][mu][rho];
                }
                nn[rho][sig][mu] = v;
            }
        }
    }
    Ok(std::array::from_fn(|mu| {
        std::array::from_fn(|rho| std::array::from_fn(|sig| nn[rho][sig][mu] - nn[sig][rho][mu]))
    }))
}

/// `⟨s^μ, [∇_ρ, ∇_σ] s_ν⟩` expressed through the `∂Γ` curvature:
/// `-R^μ_{νρσ} + T^τ_{ρσ} ⟨s^μ, ∇_τ s_ν⟩`.
pub fn commutator_components_from_riemann(
    basis: &BasisField,
    omega: &GaugeConnection,
    curvature: &CurvatureSample,
    fd: &FdConfig,
) -> Result<Rank4, GaugeError> {
    let p = curvature.point;
    let here = local(basis, omega, &p, fd)?;
    let n = here.nabla_s();
    let torsion = torsion_at(&ConnectionSample {
        point: p,
        gamma: here.gamma,
        imag_residue: here.imag,
    });
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        for nu in 0..4 {
            let b: [f64; 4] = std::array::from_fn(|tau| here.frame.dual[m].inner(&n[tau][nu]).re);
            for r in 0..4 {
                for s in 0..4 {
                    let mut v = -curvature.riemann[m][nu][r][s];
                    for tau in 0..4 {
                        v += torsion[tau][r][s] * b[tau];
                    }
                    out[m][nu][r][s] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Largest mismatch between `⟨s^μ, [∇_ρ, ∇_σ] s_ν⟩` computed directly and
/// from [`riemann_at`] through [`commutator_components_from_riemann`].
pub fn riemann_cross_check(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<f64, GaugeError> {
    let curvature = riemann_at(basis, omega, p, fd)?;
    let predicted = commutator_components_from_riemann(basis, omega, &curvature, fd)?;
    let comm = basis_commutator_at(basis, omega, p, fd)?;
    let dual = geometry::dual_basis_at(basis, p)?;
    let mut worst: f64 = 0.0;
    for m in 0..4 {
        for nu in 0..4 {
            for r in 0..4 {
                for s in 0..4 {
                    let z = dual[m].inner(&comm[nu][r][s]);
                    worst = worst.max((z - predicted[m][nu][r][s]).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// `max |[∇_ρ, ∇_σ] s_μ + Ω_{ρσ} s_μ + s_μ Ω̄*_{ρσ}|`.
pub fn strength_relation_residual(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<f64, GaugeError> {
    let comm = basis_commutator_at(basis, omega, p, fd)?;
    let strength = field_strength_at(omega, basis, p, fd)?;
    let s = basis.at(p)?;
    let mut worst: f64 = 0.0;
    for mu in 0..4 {
        for r in 0..4 {
            for t in 0..4 {
                let o = strength.omega[r][t];
                let v = comm[mu][r][t] + o * s[mu] + s[mu] * o.bar_star();
                worst = worst.max(v.max_abs());
            }
        }
    }
    Ok(worst)
}

/// The Einstein-Hilbert density computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhSample {
    /// `Σ g^{νβ} ⟨s^μ, [∇_μ, ∇_ν] s_β⟩`, from the `∂Γ` curvature.
    pub via_ricci: f64,
    /// `-2 Σ Re⟨s^μ s̄^ν, Ω_{μν}⟩`.
    pub via_omega: f64,
}

impl EhSample {
    pub fn residual(&self) -> f64 {
        (self.via_ricci - self.via_omega).abs()
    }
}

pub fn lagrangian_eh_at(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<EhSample, GaugeError> {
    let curvature = riemann_at(basis, omega, p, fd)?;
    let comm = commutator_components_from_riemann(basis, omega, &curvature, fd)?;
    let frame = geometry::frame_at(basis, p)?;
    let ginv = frame.metric.inverse_array();
    let mut via_ricci = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            for b in 0..4 {
                via_ricci += ginv[n][b] * comm[m][b][m][n];
            }
        }
    }
    let strength = field_strength_at(omega, basis, p, fd)?;
    let mut via_omega = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            let x = frame.dual[m] * frame.dual[n].quat_conj();
            via_omega -= 2.0 * x.inner(&strength.omega[m][n]).re;
        }
    }
    Ok(EhSample { via_ricci, via_omega })
}

/// `Re⟨Ω^{μν}, Ω_{μν}⟩` and its two pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticSample {
    pub total: f64,
    /// `Re⟨K^{μν}, K_{μν}⟩`
    pub kk: f64,
    /// `F^{μν} F_{μν}`
    pub ff: f64,
    pub coupling: f64,
}

impl QuadraticSample {
    /// `|total - (kk - g² ff)|`.
    pub fn residual(&self) -> f64 {
        (self.total - (self.kk - self.coupling * self.coupling * self.ff)).abs()
    }
}

fn raise_pair<T>(x: &[[T; 4]; 4], ginv: &Rank2, zero: T) -> [[T; 4]; 4]
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let mut v = zero;
            for a in 0..4 {
                for b in 0..4 {
                    v = v + x[a][b] * (ginv[m][a] * ginv[n][b]);
                }
            }
            v
        })
    })
}

pub fn lagrangian_quadratic_at(
    basis: &BasisField,
    omega: &GaugeConnection,
    p: &Point,
    fd: &FdConfig,
) -> Result<QuadraticSample, GaugeError> {
    let strength = field_strength_at(omega, basis, p, fd)?;
    let ginv = geometry::metric_at(basis, p)?.inverse_array();
    let om_up = raise_pair(&strength.omega, &ginv, Biquaternion::ZERO);
    let k_up = raise_pair(&strength.k, &ginv, Biquaternion::ZERO);
    let f_up = raise_pair(&strength.f, &ginv, 0.0);
    let (mut total, mut kk, mut ff) = (0.0, 0.0, 0.0);
    for m in 0..4 {
        for n in 0..4 {
            total += om_up[m][n].inner(&strength.omega[m][n]).re;
            kk += k_up[m][n].inner(&strength.k[m][n]).re;
            ff += f_up[m][n] * strength.f[m][n];
        }
    }
    Ok(QuadraticSample {
        total,
        kk,
        ff,
        coupling: strength.coupling,
    })
}
