//! Complexified quaternions (biquaternions).
//!
//! An element is stored as four complex coefficients on the units
//! `{1, e1, e2, e3}` with the right-handed table `e1 e2 = e3`, `e2 e3 = e1`,
//! `e3 e1 = e2` and `e_k^2 = -1`. The complex unit `i` commutes with every
//! quaternion unit.
//!
//! Two involutions act on the algebra: quaternionic conjugation (written
//! `x̄`, negates the vector part) and complex conjugation (`x*`, conjugates
//! every coefficient). Their composition `x̄*` splits the algebra into the
//! eigenspaces `(C⊗H)^-` and `(C⊗H)^+`. The minus part is where basis
//! fields live: its elements are `i·a0 + a1 e1 + a2 e2 + a3 e3` with real
//! `a_k`, and the bilinear inner product restricted to it is real with
//! Minkowski signature.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use thiserror::Error;

/// Complex coefficient type used throughout the crate.
pub type ComplexScalar = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);
const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("element is a zero divisor (|N(x)| = {norm:e} is within tolerance)")]
    ZeroDivisor { norm: f64 },
    #[error("exponential requires a pure vector argument, scalar part is {scalar}")]
    NonVectorGenerator { scalar: Complex64 },
}

/// Absolute plus relative tolerance: `residual <= abs + rel * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn bound(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale.abs()
    }

    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual.is_finite() && residual <= self.bound(scale)
    }

    pub fn is_valid(&self) -> bool {
        self.abs.is_finite() && self.rel.is_finite() && self.abs >= 0.0 && self.rel >= 0.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-12)
    }
}

/// Which involution to apply, see [`Biquaternion::conjugate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conjugation {
    /// `x̄`: negates the e1, e2, e3 coefficients.
    Quaternionic,
    /// `x*`: complex-conjugates every coefficient.
    Complex,
    /// `x̄*`: both of the above (they commute).
    BarStar,
}

/// An element of `C⊗H`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Biquaternion {
    /// Coefficients on `1, e1, e2, e3`.
    pub c: [Complex64; 4],
}

impl Biquaternion {
    pub const ZERO: Self = Self { c: [ZERO_C; 4] };
    pub const ONE: Self = Self::new(ONE_C, ZERO_C, ZERO_C, ZERO_C);
    pub const E1: Self = Self::new(ZERO_C, ONE_C, ZERO_C, ZERO_C);
    pub const E2: Self = Self::new(ZERO_C, ZERO_C, ONE_C, ZERO_C);
    pub const E3: Self = Self::new(ZERO_C, ZERO_C, ZERO_C, ONE_C);
    /// The complex unit times the quaternion identity.
    pub const I: Self = Self::new(I, ZERO_C, ZERO_C, ZERO_C);

    pub const fn new(c0: Complex64, c1: Complex64, c2: Complex64, c3: Complex64) -> Self {
        Self { c: [c0, c1, c2, c3] }
    }

    pub fn from_real(c: [f64; 4]) -> Self {
        Self {
            c: c.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::new(c, ZERO_C, ZERO_C, ZERO_C)
    }

    pub fn real(r: f64) -> Self {
        Self::scalar(Complex64::new(r, 0.0))
    }

    /// Unit `e_k` for `k` in 1..=3; `unit(0)` is the identity.
    pub fn unit(k: usize) -> Self {
        let mut out = Self::ZERO;
        out.c[k] = ONE_C;
        out
    }

    pub fn vector(c1: Complex64, c2: Complex64, c3: Complex64) -> Self {
        Self::new(ZERO_C, c1, c2, c3)
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.c[0]
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Euclidean size of the eight real components. Not the algebra norm.
    pub fn magnitude(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn quat_conj(self) -> Self {
        let [c0, c1, c2, c3] = self.c;
        Self::new(c0, -c1, -c2, -c3)
    }

    pub fn complex_conj(self) -> Self {
        Self {
            c: self.c.map(|z| z.conj()),
        }
    }

    pub fn bar_star(self) -> Self {
        self.quat_conj().complex_conj()
    }

    pub fn conjugate(self, kind: Conjugation) -> Self {
        match kind {
            Conjugation::Quaternionic => self.quat_conj(),
            Conjugation::Complex => self.complex_conj(),
            Conjugation::BarStar => self.bar_star(),
        }
    }

    /// `(scal, vec)` with `scal̄ = scal`, `vec̄ = -vec`.
    pub fn scal_vec_split(self) -> (Self, Self) {
        let [c0, c1, c2, c3] = self.c;
        (Self::scalar(c0), Self::vector(c1, c2, c3))
    }

    /// `(minus, plus)` with `minus = (x - x̄*)/2` and `plus = (x + x̄*)/2`.
    pub fn pm_split(self) -> (Self, Self) {
        let bs = self.bar_star();
        ((self - bs) * 0.5, (self + bs) * 0.5)
    }

    /// The bilinear form `⟨x, y⟩` defined by `2⟨x, y⟩ = x ȳ + y x̄`.
    ///
    /// The product expression is evaluated literally; its vector part
    /// cancels identically and only the scalar coefficient is returned.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let sym = *self * other.quat_conj() + *other * self.quat_conj();
        sym.c[0] * 0.5
    }

    /// The algebra norm `N(x) = x x̄`, a complex scalar.
    pub fn norm(&self) -> Complex64 {
        self.c.iter().map(|z| z * z).sum()
    }

    /// Norm and, unless `x` is (numerically) a zero divisor, its inverse `x̄ / N(x)`.
    pub fn norm_and_inverse(&self, tol: Tolerance) -> (Complex64, Option<Self>) {
        let n = self.norm();
        let scale = self.c.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if n.norm() <= tol.bound(scale) {
            (n, None)
        } else {
            (n, Some(self.quat_conj() * (ONE_C / n)))
        }
    }

    pub fn inverse(&self, tol: Tolerance) -> Result<Self, AlgebraError> {
        match self.norm_and_inverse(tol) {
            (_, Some(inv)) => Ok(inv),
            (n, None) => Err(AlgebraError::ZeroDivisor { norm: n.norm() }),
        }
    }

    /// `exp(q)` for a vector element `q`, using `exp(q) = cos θ + (sin θ / θ) q`
    /// with `θ² = N(q) = -q²`. The result always satisfies `Λ Λ̄ = 1`.
    pub fn exp_vec(self, tol: Tolerance) -> Result<Self, AlgebraError> {
        let scalar = self.c[0];
        if scalar.norm() > tol.bound(self.magnitude()) {
            return Err(AlgebraError::NonVectorGenerator { scalar });
        }
        let q = Self::vector(self.c[1], self.c[2], self.c[3]);
        let theta_sq = q.norm();
        let (cos, sinc) = cos_sinc(theta_sq);
        Ok(Self::scalar(cos) + q * sinc)
    }

    pub fn commutator(self, other: Self) -> Self {
        self * other - other * self
    }

    /// Largest coefficient deviation from `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }
}

/// `(cos θ, sin θ / θ)` as functions of `θ²`; both are even in `θ`, so the
/// branch of the square root does not matter.
fn cos_sinc(theta_sq: Complex64) -> (Complex64, Complex64) {
    if theta_sq.norm() < 1e-8 {
        let t2 = theta_sq;
        let t4 = t2 * t2;
        let t6 = t4 * t2;
        let cos = ONE_C - t2 / 2.0 + t4 / 24.0 - t6 / 720.0;
        let sinc = ONE_C - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0;
        (cos, sinc)
    } else {
        let theta = theta_sq.sqrt();
        (theta.cos(), theta.sin() / theta)
    }
}

impl fmt::Debug for Biquaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Biquaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = ["", "e1", "e2", "e3"];
        let mut first = true;
        for (z, label) in self.c.iter().zip(labels) {
            if *z == ZERO_C {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({}){}", z, label)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for Biquaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k] + rhs.c[k]),
        }
    }
}

impl AddAssign for Biquaternion {
    fn add_assign(&mut self, rhs: Self) {
        for k in 0..4 {
            self.c[k] += rhs.c[k];
        }
    }
}

impl Sub for Biquaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k] - rhs.c[k]),
        }
    }
}

impl SubAssign for Biquaternion {
    fn sub_assign(&mut self, rhs: Self) {
        for k in 0..4 {
            self.c[k] -= rhs.c[k];
        }
    }
}

impl Neg for Biquaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self { c: self.c.map(|z| -z) }
    }
}

impl Mul for Biquaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let [a0, a1, a2, a3] = self.c;
        let [b0, b1, b2, b3] = rhs.c;
        Self::new(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 + a2 * b0 + a3 * b1 - a1 * b3,
            a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1,
        )
    }
}

impl Mul<Complex64> for Biquaternion {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        Self {
            c: self.c.map(|z| z * rhs),
        }
    }
}

impl Mul<Biquaternion> for Complex64 {
    type Output = Biquaternion;
    fn mul(self, rhs: Biquaternion) -> Biquaternion {
        rhs * self
    }
}

impl Mul<f64> for Biquaternion {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self {
            c: self.c.map(|z| z * rhs),
        }
    }
}

impl Mul<Biquaternion> for f64 {
    type Output = Biquaternion;
    fn mul(self, rhs: Biquaternion) -> Biquaternion {
        rhs * self
    }
}

impl Div<f64> for Biquaternion {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        Self {
            c: self.c.map(|z| z / rhs),
        }
    }
}

impl Sum for Biquaternion {
    fn sum<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::ZERO, |acc, x| acc + x)
    }
}
