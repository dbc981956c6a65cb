mod common;

use expfam::deformation::{convexity_certificate, deform, default_step, power_deformed_partition, qa_mean};
use expfam::{make_family, DeformationSpec, FamilyKind, Generator, MeanGenerator, Verdict};
use proptest::prelude::*;

fn power_mean(p: f64, x: f64, y: f64, a: f64) -> f64 {
    qa_mean(&MeanGenerator::power(p), x, y, a).unwrap()
}

proptest! {
    #[test]
    fn power_means_increase_with_p(x in 0.1..10.0f64, y in 0.1..10.0f64, a in 0.0..1.0f64, p in -3.0..3.0f64, dp in 0.0..2.0f64) {
        let (lo, hi) = (power_mean(p, x, y, a), power_mean(p + dp, x, y, a));
        prop_assert!(lo <= hi * (1.0 + 1e-12), "{lo} {hi}");
    }

    #[test]
    fn quasi_arithmetic_means_lie_between_arguments(x in 0.1..10.0f64, y in 0.1..10.0f64, a in 0.0..1.0f64, p in -3.0..3.0f64) {
        for h in [MeanGenerator::Identity, MeanGenerator::Log, MeanGenerator::power(p), MeanGenerator::power(p).inverse()] {
            if let Ok(m) = qa_mean(&h, x, y, a) {
                prop_assert!(x.min(y) <= m && m <= x.max(y), "{h} {m}");
            }
        }
    }

    #[test]
    fn deformation_then_inverse_is_identity(p in -2.0..3.0f64, t in 0.3..4.0f64) {
        let z = Generator::partition(&make_family(FamilyKind::Exponential, 1).unwrap());
        let spec = DeformationSpec::new(MeanGenerator::Log, MeanGenerator::power(p).inverse());
        let round = deform(&deform(&z, &spec), &spec.inverse());
        let (a, b) = (round.value_at(&[t]).unwrap(), z.value_at(&[t]).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * b, "{a} {b}");
        let once = deform(&z, &spec.then(&spec.inverse()));
        prop_assert!((once.value_at(&[t]).unwrap() - b).abs() <= 1e-9 * b);
    }

    #[test]
    fn power_deformation_matches_closed_form(p in -2.0..3.0f64, t in 0.3..4.0f64) {
        let z = Generator::partition(&make_family(FamilyKind::Exponential, 1).unwrap());
        let spec = DeformationSpec::new(MeanGenerator::Identity, MeanGenerator::power(p).inverse());
        let a = deform(&z, &spec).value_at(&[t]).unwrap();
        let b = power_deformed_partition::<f64>(p).value_at(&[t]).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} {b}");
    }
}

#[test]
fn power_certificate_follows_curvature_sign() {
    let grid: Vec<Vec<f64>> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|v| vec![*v]).collect();
    let step = default_step(&grid);
    for i in -8..=20 {
        let p = i as f64 * 0.25;
        let cert = convexity_certificate(&power_deformed_partition::<f64>(p), &grid, step).unwrap();
        let expected = if p > -1.0 {
            Verdict::Convex
        } else if p < -1.0 {
            Verdict::NotConvex
        } else {
            continue;
        };
        assert_eq!(cert.verdict, expected, "p = {p}: {cert:?}");
    }
}
