//! Coordinate charts, field sources and finite-difference derivatives.

mod expr;

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::Biquaternion;

pub use expr::{is_reserved, parse_expr, EvalError, FieldExpr, Func, Node, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("coordinate name `{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("coordinate name `{0}` is reserved")]
    Reserved(String),
    #[error("coordinate name `{0}` appears more than once")]
    Duplicate(String),
}

/// Four coordinate names. No metric or topology is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    names: [String; 4],
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: [S; 4]) -> Result<Self, ChartError> {
        let names = names.map(|s| s.as_ref().to_string());
        for (k, name) in names.iter().enumerate() {
            let mut chars = name.chars();
            let valid = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(ChartError::InvalidName(name.clone()));
            }
            if is_reserved(name) {
                return Err(ChartError::Reserved(name.clone()));
            }
            if names[..k].contains(name) {
                return Err(ChartError::Duplicate(name.clone()));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String; 4] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A point of the chart: four real coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: [f64; 4],
}

impl Point {
    pub const fn new(x: [f64; 4]) -> Self {
        Self { x }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
    }

    /// The point displaced by `delta` along coordinate `mu`.
    pub fn shifted(&self, mu: usize, delta: f64) -> Self {
        let mut x = self.x;
        x[mu] += delta;
        Self { x }
    }
}

impl From<[f64; 4]> for Point {
    fn from(x: [f64; 4]) -> Self {
        Self::new(x)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("component {component}: {source}")]
    Eval {
        component: usize,
        #[source]
        source: EvalError,
    },
    #[error("field value is not finite")]
    NonFinite,
    #[error("point is not finite")]
    NonFinitePoint,
    #[error("expected a real value, found imaginary part {0:e}")]
    NotReal(f64),
    #[error("{0}")]
    Other(String),
}

/// Anything that yields a biquaternion at a chart point.
pub trait BiquatSource: Send + Sync {
    fn eval(&self, p: &Point) -> Result<Biquaternion, FieldError>;
}

/// Anything that yields a complex number at a chart point.
pub trait ScalarSource: Send + Sync {
    fn eval(&self, p: &Point) -> Result<Complex64, FieldError>;

    /// Evaluate and insist on a real value (imaginary part within `tol`).
    fn eval_real(&self, p: &Point, tol: f64) -> Result<f64, FieldError> {
        let z = self.eval(p)?;
        if z.im.abs() > tol {
            return Err(FieldError::NotReal(z.im));
        }
        Ok(z.re)
    }
}

pub type FieldRef = Arc<dyn BiquatSource>;
pub type ScalarRef = Arc<dyn ScalarSource>;

impl ScalarSource for FieldExpr {
    fn eval(&self, p: &Point) -> Result<Complex64, FieldError> {
        if !p.is_finite() {
            return Err(FieldError::NonFinitePoint);
        }
        FieldExpr::eval(self, p).map_err(|source| FieldError::Eval { component: 0, source })
    }
}

/// A biquaternion field given by one expression per unit `1, e1, e2, e3`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquatField {
    components: [FieldExpr; 4],
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("component {component}: {source}")]
pub struct ComponentParseError {
    pub component: usize,
    #[source]
    pub source: ParseError,
}

impl BiquatField {
    pub fn new(components: [FieldExpr; 4]) -> Self {
        Self { components }
    }

    pub fn parse<S: AsRef<str>>(texts: [S; 4], chart: &Chart) -> Result<Self, ComponentParseError> {
        let mut out = Vec::with_capacity(4);
        for (component, text) in texts.iter().enumerate() {
            let e = parse_expr(text.as_ref(), chart).map_err(|source| ComponentParseError { component, source })?;
            out.push(e);
        }
        Ok(Self {
            components: out.try_into().unwrap(),
        })
    }

    pub fn constant(b: Biquaternion) -> Self {
        Self {
            components: b.c.map(FieldExpr::constant),
        }
    }

    pub fn components(&self) -> &[FieldExpr; 4] {
        &self.components
    }

    pub fn into_ref(self) -> FieldRef {
        Arc::new(self)
    }
}

impl BiquatSource for BiquatField {
    fn eval(&self, p: &Point) -> Result<Biquaternion, FieldError> {
        eval_field(self, p)
    }
}

/// Component-wise evaluation of `f` at `p`.
pub fn eval_field(f: &BiquatField, p: &Point) -> Result<Biquaternion, FieldError> {
    if !p.is_finite() {
        return Err(FieldError::NonFinitePoint);
    }
    let mut out = Biquaternion::ZERO;
    for (component, e) in f.components.iter().enumerate() {
        out.c[component] = e.eval(p).map_err(|source| FieldError::Eval { component, source })?;
    }
    Ok(out)
}

/// Adapter turning a closure into a [`BiquatSource`].
pub struct FnField<F>(pub F);

impl<F> BiquatSource for FnField<F>
where
    F: Fn(&Point) -> Result<Biquaternion, FieldError> + Send + Sync,
{
    fn eval(&self, p: &Point) -> Result<Biquaternion, FieldError> {
        let v = (self.0)(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FieldError::NonFinite)
        }
    }
}

/// Adapter turning a closure into a [`ScalarSource`].
pub struct FnScalar<F>(pub F);

impl<F> ScalarSource for FnScalar<F>
where
    F: Fn(&Point) -> Result<Complex64, FieldError> + Send + Sync,
{
    fn eval(&self, p: &Point) -> Result<Complex64, FieldError> {
        (self.0)(p)
    }
}

pub fn field_fn<F>(f: F) -> FieldRef
where
    F: Fn(&Point) -> Result<Biquaternion, FieldError> + Send + Sync + 'static,
{
    Arc::new(FnField(f))
}

pub fn constant_field(b: Biquaternion) -> FieldRef {
    field_fn(move |_| Ok(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }

    pub fn from_u32(order: u32) -> Option<Self> {
        match order {
            2 => Some(FdOrder::Second),
            4 => Some(FdOrder::Fourth),
            _ => None,
        }
    }
}

/// Central-difference configuration: a step per coordinate and the order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: [f64; 4],
    pub order: FdOrder,
}

impl FdConfig {
    pub fn new(step: f64, order: FdOrder) -> Self {
        Self { step: [step; 4], order }
    }

    pub fn is_valid(&self) -> bool {
        self.step.iter().all(|h| h.is_finite() && *h > 0.0)
    }

    /// Same order, every step scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            step: self.step.map(|h| h * factor),
            order: self.order,
        }
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        Self::new(1e-4, FdOrder::Fourth)
    }
}

/// Values that a stencil can combine linearly.
pub trait FdValue: Sized {
    /// `(self - other) * w`
    fn diff_scaled(&self, other: &Self, w: f64) -> Self;
    fn add_assign(&mut self, other: &Self);
}

impl FdValue for f64 {
    fn diff_scaled(&self, other: &Self, w: f64) -> Self {
        (self - other) * w
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl FdValue for Complex64 {
    fn diff_scaled(&self, other: &Self, w: f64) -> Self {
        (self - other) * w
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl FdValue for Biquaternion {
    fn diff_scaled(&self, other: &Self, w: f64) -> Self {
        (*self - *other) * w
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
}

impl<T: FdValue, const N: usize> FdValue for [T; N] {
    fn diff_scaled(&self, other: &Self, w: f64) -> Self {
        std::array::from_fn(|k| self[k].diff_scaled(&other[k], w))
    }
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_assign(b);
        }
    }
}

impl<T: FdValue> FdValue for Vec<T> {
    fn diff_scaled(&self, other: &Self, w: f64) -> Self {
        self.iter().zip(other).map(|(a, b)| a.diff_scaled(b, w)).collect()
    }
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_assign(b);
        }
    }
}

/// Central difference of an arbitrary linear-valued function along `mu`.
///
/// Order 2: `(f(x+h) - f(x-h)) / 2h`.
/// Order 4: `(-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h`.
pub fn derivative<T, E, F>(mut f: F, mu: usize, p: &Point, fd: &FdConfig) -> Result<T, E>
where
    T: FdValue,
    F: FnMut(&Point) -> Result<T, E>,
{
    let h = fd.step[mu];
    // Antisymmetric pairs (offset, weight); differencing each pair first
    // makes the derivative of a constant exactly zero.
    let pairs: &[(f64, f64)] = match fd.order {
        FdOrder::Second => &[(1.0, 0.5)],
        FdOrder::Fourth => &[(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
    };
    let mut acc: Option<T> = None;
    for &(off, w) in pairs {
        let fwd = f(&p.shifted(mu, off * h))?;
        let bwd = f(&p.shifted(mu, -off * h))?;
        let term = fwd.diff_scaled(&bwd, w / h);
        match acc.as_mut() {
            None => acc = Some(term),
            Some(a) => a.add_assign(&term),
        }
    }
    Ok(acc.expect("stencil has at least one pair"))
}

/// `∂_mu f` at `p`, component-wise.
pub fn partial<F>(f: &F, mu: usize, p: &Point, fd: &FdConfig) -> Result<Biquaternion, FieldError>
where
    F: BiquatSource + ?Sized,
{
    derivative(|q| f.eval(q), mu, p, fd)
}

/// `∂_mu f` at `p` for a complex scalar field.
pub fn partial_scalar<F>(f: &F, mu: usize, p: &Point, fd: &FdConfig) -> Result<Complex64, FieldError>
where
    F: ScalarSource + ?Sized,
{
    derivative(|q| f.eval(q), mu, p, fd)
}
