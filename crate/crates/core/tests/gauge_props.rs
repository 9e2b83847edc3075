mod common;

use common::*;
use proptest::prelude::*;
use qframe::fields::FdConfig;
use qframe::{gauge, Biquaternion, FdOrder, Point};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strength_closure(b in basis_params(), w in omega_params(), g in coupling(), p in point()) {
        let basis = build_basis(&b);
        let omega = build_omega(&w, g);
        let fd = FdConfig::default();
        prop_assert_eq!(gauge::check_omega_condition(&omega, &p).unwrap(), 0.0);
        let d = gauge::decompose_omega(&omega, &p).unwrap();
        let re = d.recompose();
        let orig = omega.at(&p).unwrap();
        for mu in 0..4 {
            prop_assert!(re[mu].distance(&orig[mu]) <= 1e-15 * (1.0 + orig[mu].max_abs()));
        }
        let s = gauge::field_strength_at(&omega, &basis, &p, &fd).unwrap();
        prop_assert!(s.antisymmetry_residual() <= 1e-13);
        prop_assert!(s.decomposition_residual() <= 1e-12);
        for row in &s.k {
            for k in row {
                prop_assert!(k.scalar_part().norm() <= 1e-12);
            }
        }
        let q = gauge::lagrangian_quadratic_at(&basis, &omega, &p, &fd).unwrap();
        prop_assert!(q.residual() <= 1e-10 * (1.0 + q.total.abs()), "{:?}", q);
    }

    #[test]
    fn curvature_identities(b in basis_params(), w in omega_params(), p in point()) {
        let basis = build_basis(&b);
        let omega = build_omega(&w, 1.0);
        let fd = FdConfig::default();
        let c = gauge::riemann_at(&basis, &omega, &p, &fd).unwrap();
        prop_assert!(c.antisymmetry_residual() <= 1e-9);
        prop_assert!(c.imag_residue <= 1e-10);
        let cross = gauge::riemann_cross_check(&basis, &omega, &p, &fd).unwrap();
        prop_assert!(cross <= 1e-6, "cross-check {:e}", cross);
        let rel = gauge::strength_relation_residual(&basis, &omega, &p, &fd).unwrap();
        prop_assert!(rel <= 1e-7, "relation {:e}", rel);
        let eh = gauge::lagrangian_eh_at(&basis, &omega, &p, &fd).unwrap();
        prop_assert!(eh.residual() <= 1e-6, "{:?}", eh);
        let tf = gauge::torsion_f_residual(&omega, &basis, &p, &fd).unwrap();
        prop_assert!(tf <= 1e-7, "torsion F {:e}", tf);
    }
}

#[test]
fn decomposition_examples() {
    use qframe::fields::{BiquatField, Chart};
    let chart = Chart::new(["t", "x", "y", "z"]).unwrap();
    let f = |t: [&str; 4]| BiquatField::parse(t, &chart).unwrap().into_ref();
    let p = Point::new([0.1, 0.2, 0.3, 0.4]);

    let w = qframe::GaugeConnection::new(
        [
            f(["0.5*im", "0", "0", "0"]),
            f(["0", "0", "0", "1"]),
            f(["0"; 4]),
            f(["0"; 4]),
        ],
        0.25,
    );
    let d = gauge::decompose_omega(&w, &p).unwrap();
    assert_eq!(d.a, [2.0, 0.0, 0.0, 0.0]);
    assert_eq!(d.chi[0], Biquaternion::ZERO);
    assert_eq!(d.chi[1], Biquaternion::E3);

    let check = qframe::GaugeConnection::new(
        [
            f(["im*t", "0", "0", "0"]),
            f(["0", "1", "im", "0"]),
            f(["1", "0", "0", "0"]),
            f(["0"; 4]),
        ],
        1.0,
    );
    assert_eq!(gauge::check_omega_condition(&check, &p).unwrap(), 2.0);
}

#[test]
fn strength_relation_converges() {
    use proptest::strategy::ValueTree;
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let b = basis_params().new_tree(&mut runner).unwrap().current();
    let w = omega_params().new_tree(&mut runner).unwrap().current();
    let basis = build_basis(&b);
    let omega = build_omega(&w, 1.0);
    let p = Point::new([0.2, -0.4, 0.1, 0.3]);
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let coarse = FdConfig::new(0.1, order);
        let r1 = gauge::strength_relation_residual(&basis, &omega, &p, &coarse).unwrap();
        let r2 = gauge::strength_relation_residual(&basis, &omega, &p, &coarse.scaled(0.5)).unwrap();
        let rate = (r1 / r2).log2();
        let n = order.as_u32() as f64;
        assert!(
            rate >= n - 0.5 && rate <= n + 0.5,
            "order {n}: rate {rate} ({r1:e} -> {r2:e})"
        );
    }
}
