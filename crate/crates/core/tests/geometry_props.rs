mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use qframe::fields::{parse_expr, Chart, FdConfig};
use qframe::geometry::{self, max_abs2, max_abs3, Species, TensorField};
use qframe::{Biquaternion, ScalarRef};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_structure(b in basis_params(), p in point()) {
        let basis = build_basis(&b);
        let frame = geometry::frame_at(&basis, &p).unwrap();
        let m = &frame.metric;
        prop_assert!(m.imag_residue <= 1e-13);
        prop_assert_eq!(m.g, m.g.transpose());
        prop_assert!(frame.dual_pairing_residual() <= 1e-10);
        let id = m.g * m.inverse;
        prop_assert!((id - nalgebra::Matrix4::identity()).abs().max() <= 1e-12);
    }

    #[test]
    fn minimal_connection(b in basis_params(), w in omega_params(), g in coupling(), p in point()) {
        let basis = build_basis(&b);
        let omega = build_omega(&w, g);
        let fd = FdConfig::default();
        let gamma = geometry::gamma_minimal_at(&basis, &omega, &p, &fd).unwrap();
        prop_assert!(gamma.imag_residue <= 1e-10);
        let field = TensorField::basis(&basis);
        for rho in 0..4 {
            for d in geometry::covariant_derivative_at(&field, rho, &omega, &gamma, &p, &fd).unwrap() {
                prop_assert!(d.magnitude() <= 1e-8, "D s = {}", d);
            }
        }
        prop_assert!(max_abs3(&geometry::nabla_metric_residual(&basis, &omega, &p, &fd).unwrap()) <= 1e-8);
        let chris = geometry::christoffel_at(&basis, &p, &fd).unwrap();
        prop_assert!(max_abs3(&geometry::metric_leibniz_residual(&basis, &omega, &chris, &p, &fd).unwrap()) <= 1e-8);
    }

    #[test]
    fn component_identity_for_polynomials(
        b in basis_params(),
        w in omega_params(),
        coeffs in proptest::collection::vec(-2.0..2.0f64, 12),
        p in point(),
    ) {
        let chart = Chart::new(["t", "x", "y", "z"]).unwrap();
        let comps: [ScalarRef; 4] = std::array::from_fn(|mu| {
            let c = &coeffs[3 * mu..3 * mu + 3];
            let text = format!("{} + {}*t*x + {}*im*y^2 - z^3", c[0], c[1], c[2]);
            Arc::new(parse_expr(&text, &chart).unwrap()) as ScalarRef
        });
        let r = geometry::component_identity_check(&comps, &build_basis(&b), &build_omega(&w, 1.0), &p, &FdConfig::default()).unwrap();
        prop_assert!(max_abs2(&r) <= 1e-7);
    }

    #[test]
    fn scalar_species_ignores_omega(w in omega_params(), p in point()) {
        let omega = build_omega(&w, 1.0);
        let s = TensorField::scalar_rank0(Species::Scalar, qframe::fields::constant_field(Biquaternion::E2));
        let gamma = qframe::ConnectionSample::zero(p);
        for rho in 0..4 {
            let d = geometry::covariant_derivative_at(&s, rho, &omega, &gamma, &p, &FdConfig::default()).unwrap();
            prop_assert_eq!(d[0], Biquaternion::ZERO);
        }
    }
}

#[test]
fn metric_compatibility_converges_at_fourth_order() {
    use proptest::strategy::ValueTree;
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let b = basis_params().new_tree(&mut runner).unwrap().current();
    let w = omega_params().new_tree(&mut runner).unwrap().current();
    let basis = build_basis(&b);
    let omega = build_omega(&w, 1.0);
    let p = qframe::Point::new([0.2, -0.4, 0.1, 0.3]);
    let coarse = FdConfig::new(0.2, qframe::FdOrder::Fourth);
    let r1 = max_abs3(&geometry::nabla_metric_residual(&basis, &omega, &p, &coarse).unwrap());
    let r2 = max_abs3(&geometry::nabla_metric_residual(&basis, &omega, &p, &coarse.scaled(0.5)).unwrap());
    let rate = (r1 / r2).log2();
    assert!(r1 > 1e-8, "residual {r1:e} too small to measure a rate");
    assert!((3.5..=4.5).contains(&rate), "rate {rate} ({r1:e} -> {r2:e})");
}
