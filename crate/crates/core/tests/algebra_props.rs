//! Algebra invariants checked against an independent model: the 2×2
//! complex matrix representation `1 ↦ I`, `e_k ↦ -i σ_k`, in which the
//! norm is the determinant.

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qframe::{Biquaternion, Tolerance};

type M2 = [[C; 2]; 2];

fn to_matrix(x: &Biquaternion) -> M2 {
    let [a, b, c, d] = x.c;
    let i = C::i();
    // a I - i (b σ1 + c σ2 + d σ3)
    [[a - i * d, -i * b - c], [-i * b + c, a + i * d]]
}

fn mat_mul(x: &M2, y: &M2) -> M2 {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = x[r][0] * y[0][c] + x[r][1] * y[1][c];
        }
    }
    out
}

fn det(x: &M2) -> C {
    x[0][0] * x[1][1] - x[0][1] * x[1][0]
}

fn mat_dist(x: &M2, y: &M2) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((x[r][c] - y[r][c]).norm());
        }
    }
    worst
}

/// Component form of the inner product, independent of the product table.
fn inner_oracle(x: &Biquaternion, y: &Biquaternion) -> C {
    (0..4).map(|k| x.c[k] * y.c[k]).sum()
}

fn coeff() -> impl Strategy<Value = C> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn bq() -> impl Strategy<Value = Biquaternion> {
    [coeff(), coeff(), coeff(), coeff()].prop_map(|c| Biquaternion { c })
}

fn minus_part() -> impl Strategy<Value = Biquaternion> {
    bq().prop_map(|x| x.pm_split().0)
}

fn close(a: C, b: C, scale: f64) -> bool {
    (a - b).norm() <= 1e-12 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn product_matches_matrix_model(x in bq(), y in bq()) {
        let lhs = to_matrix(&(x * y));
        let rhs = mat_mul(&to_matrix(&x), &to_matrix(&y));
        prop_assert!(mat_dist(&lhs, &rhs) <= 1e-12 * (1.0 + x.magnitude() * y.magnitude()));
    }

    #[test]
    fn norm_is_determinant(x in bq()) {
        let n = x.norm();
        prop_assert!(close(n, det(&to_matrix(&x)), x.magnitude().powi(2)));
        prop_assert!(close(n, inner_oracle(&x, &x), x.magnitude().powi(2)));
    }

    #[test]
    fn inner_product_rules(x in bq(), y in bq(), z in bq()) {
        let xy = x.inner(&y);
        let scale = x.magnitude() * y.magnitude();
        prop_assert!(close(xy, inner_oracle(&x, &y), scale));
        prop_assert!(close(xy, y.inner(&x), xy.norm()));
        prop_assert!(close(xy, x.quat_conj().inner(&y.quat_conj()), xy.norm()));
        let s3 = x.magnitude() * y.magnitude() * z.magnitude();
        prop_assert!(close(x.inner(&(y * z)), (y.quat_conj() * x).inner(&z), s3));
        prop_assert!(close((x * y).inner(&z), x.inner(&(z * y.quat_conj())), s3));
    }

    #[test]
    fn composition_and_conjugations(x in bq(), y in bq()) {
        let scale = (x.magnitude() * y.magnitude()).powi(2);
        prop_assert!(close((x * y).norm(), x.norm() * y.norm(), scale));
        let s = x.magnitude() * y.magnitude();
        prop_assert!((x * y).quat_conj().distance(&(y.quat_conj() * x.quat_conj())) <= 1e-12 * (1.0 + s));
        prop_assert!((x * y).complex_conj().distance(&(x.complex_conj() * y.complex_conj())) <= 1e-12 * (1.0 + s));
        let lhs = x.bar_star().commutator(y.bar_star());
        let rhs = -(x.commutator(y)).bar_star();
        prop_assert!(lhs.distance(&rhs) <= 1e-12 * (1.0 + s));
    }

    #[test]
    fn minus_part_pairs_are_real(x in minus_part(), y in minus_part()) {
        prop_assert!(x.inner(&y).im.abs() <= 1e-13 * (1.0 + x.magnitude() * y.magnitude()));
    }

    #[test]
    fn scalars_are_orthogonal_to_vectors(a in coeff(), b in coeff(), c in coeff(), d in coeff()) {
        let s = Biquaternion::scalar(a);
        let v = Biquaternion::vector(b, c, d);
        prop_assert_eq!(s.inner(&v), C::new(0.0, 0.0));
    }

    #[test]
    fn pm_split_is_a_projection(x in bq()) {
        let (m, p) = x.pm_split();
        prop_assert!((m + p).distance(&x) <= 1e-15 * (1.0 + x.max_abs()));
        prop_assert!(m.bar_star().distance(&-m) <= 1e-15 * (1.0 + m.max_abs()));
        prop_assert!(p.bar_star().distance(&p) <= 1e-15 * (1.0 + p.max_abs()));
        let (mm, mp) = m.pm_split();
        let (pm, pp) = p.pm_split();
        prop_assert_eq!(mm, m);
        prop_assert_eq!(mp, Biquaternion::ZERO);
        prop_assert_eq!(pm, Biquaternion::ZERO);
        prop_assert_eq!(pp, p);
    }

    #[test]
    fn exp_vec_is_unit(b in coeff(), c in coeff(), d in coeff()) {
        let q = Biquaternion::vector(b, c, d);
        let q = if q.magnitude() > 2.0 { q * (2.0 / q.magnitude()) } else { q };
        let l = q.exp_vec(Tolerance::default()).unwrap();
        prop_assert!((l * l.quat_conj()).distance(&Biquaternion::ONE) <= 1e-12);
        prop_assert!((l.quat_conj() * l).distance(&Biquaternion::ONE) <= 1e-12);
    }

    #[test]
    fn inverse_is_two_sided(x in bq()) {
        let tol = Tolerance::default();
        if let (_, Some(inv)) = x.norm_and_inverse(tol) {
            let cond = x.magnitude().powi(2) / x.norm().norm();
            prop_assume!(cond < 1e6);
            prop_assert!((x * inv).distance(&Biquaternion::ONE) <= 1e-12 * cond);
            prop_assert!((inv * x).distance(&Biquaternion::ONE) <= 1e-12 * cond);
        }
    }
}

#[test]
fn exp_vec_matches_power_series() {
    // Truncated exponential series as an oracle.
    let q = Biquaternion::vector(C::new(0.3, -0.2), C::new(0.0, 0.5), C::new(-0.4, 0.1));
    let mut term = Biquaternion::ONE;
    let mut sum = Biquaternion::ONE;
    for n in 1..40 {
        term = term * q * (1.0 / n as f64);
        sum += term;
    }
    assert!(q.exp_vec(Tolerance::default()).unwrap().distance(&sum) < 1e-14);
}
