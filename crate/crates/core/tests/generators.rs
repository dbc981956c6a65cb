mod common;

use approx::assert_relative_eq;
use common::*;
use expfam::{bregman, duo_bregman, jensen_scaled, jensen_scaled_with, jensen_skewed, Generator, JensenScaling, Skew};
use proptest::prelude::*;

proptest! {
    #[test]
    fn cumulant_is_log_partition((m, t, _) in pair(any_kind())) {
        let f = m.cumulant(&t).unwrap();
        let z = m.partition(&t).unwrap();
        prop_assert!(rel(f.exp(), z) < 1e-12);
    }

    #[test]
    fn grad_cumulant_is_normalized_grad_partition((m, t, _) in pair(any_kind())) {
        let z = m.partition(&t).unwrap();
        let gf = m.grad_cumulant(&t).unwrap();
        let gz = m.grad_partition(&t).unwrap();
        for (a, b) in gf.coords().iter().zip(gz.coords()) {
            prop_assert!(rel(*a, b / z) < 1e-10);
        }
    }

    #[test]
    fn closed_gradients_match_finite_differences((m, t, _) in pair(any_kind())) {
        for g in [Generator::cumulant(&m), Generator::partition(&m)] {
            let exact = g.gradient(&t).unwrap();
            let fd = g.finite_difference_gradient(t.coords()).unwrap();
            for (a, b) in exact.coords().iter().zip(&fd) {
                prop_assert!(rel(*a, *b) < 1e-6, "{} {a} {b}", g.name());
            }
        }
    }

    #[test]
    fn domain_is_convex((m, t1, t2) in pair(any_kind()), alpha in 0.0..1.0f64) {
        prop_assert!(m.in_domain(t1.mix(&t2, alpha).coords()));
    }

    #[test]
    fn bregman_divergences_are_nonnegative((m, t1, t2) in pair(any_kind())) {
        let f = Generator::cumulant(&m);
        let z = Generator::partition(&m);
        let bf = bregman(&f, &t1, &t2).unwrap();
        let bz = bregman(&z, &t1, &t2).unwrap();
        prop_assert!(bf >= -1e-12);
        // Z = exp F gives B_Z(t1 : t2) >= Z(t2) B_F(t1 : t2).
        let z2 = m.partition(&t2).unwrap();
        prop_assert!(bz - z2 * bf >= -1e-10 * (1.0 + bz.abs()), "{bz} {z2} {bf}");
        prop_assert_eq!(bregman(&f, &t1, &t1).unwrap(), 0.0);
    }

    #[test]
    fn jensen_reference_duality((m, t1, t2) in pair(any_kind()), alpha in 0.01..0.99f64) {
        for g in [Generator::cumulant(&m), Generator::partition(&m)] {
            let a = jensen_skewed(&g, &t1, &t2, alpha).unwrap();
            let b = jensen_skewed(&g, &t2, &t1, 1.0 - alpha).unwrap();
            prop_assert!(a >= -1e-12);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + g.value(&t1).unwrap().abs() + g.value(&t2).unwrap().abs()));
        }
    }

    #[test]
    fn scaled_jensen_tends_to_bregman((m, t1, t2) in pair(one_d_kind())) {
        let eps = 1e-5;
        let f = Generator::cumulant(&m);
        let lo = jensen_scaled(&f, &t1, &t2, Skew::General(eps)).unwrap();
        let hi = jensen_scaled(&f, &t1, &t2, Skew::General(1.0 - eps)).unwrap();
        let b0 = jensen_scaled(&f, &t1, &t2, Skew::Limit0).unwrap();
        let b1 = jensen_scaled(&f, &t1, &t2, Skew::Limit1).unwrap();
        prop_assert!((lo - b0).abs() <= 1e-3 * (1.0 + b0), "{lo} {b0}");
        prop_assert!((hi - b1).abs() <= 1e-3 * (1.0 + b1), "{hi} {b1}");
    }

    #[test]
    fn kappa_scaling_is_plain_jensen_at_half((m, t1, t2) in pair(any_kind())) {
        let f = Generator::cumulant(&m);
        let k = jensen_scaled_with(&f, &t1, &t2, Skew::Half, JensenScaling::Kappa).unwrap();
        prop_assert_eq!(k, jensen_skewed(&f, &t1, &t2, 0.5).unwrap());
    }

    #[test]
    fn duo_bregman_dominates_bregman((m, t1, t2) in pair(any_kind())) {
        let f = Generator::cumulant(&m);
        let duo = duo_bregman(&Generator::partition_minus_one(&m), &f, &t1, &t2).unwrap();
        let bf = bregman(&f, &t1, &t2).unwrap();
        prop_assert!(duo >= bf - 1e-10 * (1.0 + duo.abs()), "{duo} {bf}");
    }
}

#[test]
fn duo_bregman_refuses_reversed_order() {
    let m = model(expfam::FamilyKind::Poisson);
    let (a, b) = (m.param(vec![0.5]).unwrap(), m.param(vec![-0.5]).unwrap());
    let err = duo_bregman(&Generator::cumulant(&m), &Generator::partition_minus_one(&m), &a, &b);
    assert!(matches!(err, Err(expfam::Error::GeneratorOrder { .. })));
}

#[test]
fn exponential_closed_forms() {
    let m = model(expfam::FamilyKind::Exponential);
    let (a, b) = (m.param(vec![1.0]).unwrap(), m.param(vec![2.0]).unwrap());
    let z = Generator::partition(&m);
    assert_relative_eq!(bregman(&z, &a, &b).unwrap(), 0.25, max_relative = 1e-15);
    assert_relative_eq!(bregman(&z, &b, &a).unwrap(), 0.5, max_relative = 1e-15);
    assert_relative_eq!(jensen_scaled(&z, &a, &b, Skew::Half).unwrap(), 4.0 * (0.75 - 1.0 / 1.5), max_relative = 1e-14);
}
