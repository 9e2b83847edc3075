//! Frame-free tensor and spinor calculus in curved spacetime over the
//! complexified quaternions.
//!
//! A spacetime is described by four basis fields `s_μ` valued in the minus
//! part of `C⊗H` together with a gauge connection `ω_μ`. From these the
//! crate builds the metric, the minimal connection coefficients, covariant
//! derivatives of spinor, vector and scalar fields, field strengths and
//! curvature, and the local Lorentz and U(1) transformation laws. Every
//! quantity is evaluated pointwise, with finite differences standing in
//! for partial derivatives.

// Tensor code reads best with explicit index loops.
#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod fields;
pub mod gauge;
pub mod geometry;
pub mod transform;

pub use algebra::{AlgebraError, Biquaternion, ComplexScalar, Conjugation, Tolerance};
pub use fields::{
    BiquatField, BiquatSource, Chart, FdConfig, FdOrder, FieldError, FieldExpr, FieldRef, Point, ScalarRef,
    ScalarSource,
};
pub use gauge::{
    CurvatureSample, EhSample, GaugeConnection, GaugeError, OmegaDecomposition, QuadraticSample, StrengthSample,
};
pub use geometry::{
    BasisField, ConnectionSample, Frame, GeometryError, MetricSample, Species, SpeciesTag, TensorField,
};
pub use transform::{
    CoordinateMap, CovarianceInputs, CovarianceKind, LorentzField, TransformError, Transformation, U1Field,
};
