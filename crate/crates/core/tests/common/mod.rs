//! Random smooth scenarios for the property tests.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qframe::fields::field_fn;
use qframe::{BasisField, Biquaternion, FieldRef, GaugeConnection, Point};

/// `base + amp * sin(freq · x + phase)`
#[derive(Debug, Clone, Copy)]
pub struct Wave {
    pub base: f64,
    pub amp: f64,
    pub freq: [f64; 4],
    pub phase: f64,
}

impl Wave {
    pub fn at(&self, p: &Point) -> f64 {
        let arg: f64 = (0..4).map(|k| self.freq[k] * p.x[k]).sum::<f64>() + self.phase;
        self.base + self.amp * arg.sin()
    }
}

pub fn wave(base: f64, amp: f64) -> impl Strategy<Value = Wave> {
    (
        -amp..=amp,
        [-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64],
        0.0..6.3f64,
    )
        .prop_map(move |(amp, freq, phase)| Wave { base, amp, freq, phase })
}

/// Sixteen waves: the flat basis plus smooth perturbations, kept in the
/// minus part (`i·real` scalar coefficient, real vector coefficients).
pub fn basis_params() -> impl Strategy<Value = Vec<Wave>> {
    (0..16)
        .map(|k| {
            let (mu, unit) = (k / 4, k % 4);
            wave(if mu == unit { 1.0 } else { 0.0 }, 0.15)
        })
        .collect::<Vec<_>>()
}

pub fn build_basis(params: &[Wave]) -> BasisField {
    let params = params.to_vec();
    BasisField::new(std::array::from_fn(|mu| {
        let w: [Wave; 4] = std::array::from_fn(|k| params[4 * mu + k]);
        field_fn(move |p| {
            Ok(Biquaternion::new(
                C::new(0.0, w[0].at(p)),
                C::new(w[1].at(p), 0.0),
                C::new(w[2].at(p), 0.0),
                C::new(w[3].at(p), 0.0),
            ))
        })
    }))
}

/// Seven waves per direction: the imaginary scalar part and real and
/// imaginary parts of the three vector coefficients.
pub fn omega_params() -> impl Strategy<Value = Vec<Wave>> {
    (0..28).map(|_| wave(0.0, 0.4)).collect::<Vec<_>>()
}

pub fn omega_field(w: [Wave; 7]) -> FieldRef {
    field_fn(move |p| {
        Ok(Biquaternion::new(
            C::new(0.0, w[0].at(p)),
            C::new(w[1].at(p), w[2].at(p)),
            C::new(w[3].at(p), w[4].at(p)),
            C::new(w[5].at(p), w[6].at(p)),
        ))
    })
}

pub fn build_omega(params: &[Wave], coupling: f64) -> GaugeConnection {
    GaugeConnection::new(
        std::array::from_fn(|mu| omega_field(std::array::from_fn(|k| params[7 * mu + k]))),
        coupling,
    )
}

pub fn point() -> impl Strategy<Value = Point> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64].prop_map(Point::new)
}

pub fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), 0.2..2.0f64]
}
