#![allow(dead_code)]

use expfam::{linalg, make_family, FamilyKind, FamilyModel, Param};
use proptest::prelude::*;

pub const ONE_D: [FamilyKind; 4] = [
    FamilyKind::Exponential,
    FamilyKind::Poisson,
    FamilyKind::Bernoulli,
    FamilyKind::CenteredNormal1D,
];

pub fn model(kind: FamilyKind) -> FamilyModel {
    make_family(kind, if kind == FamilyKind::CenteredNormalND { 2 } else { 1 }).unwrap()
}

/// Interior parameters, kept away from the domain boundary.
pub fn coords(kind: FamilyKind) -> BoxedStrategy<Vec<f64>> {
    match kind {
        FamilyKind::Exponential | FamilyKind::CenteredNormal1D => (0.3..4.0f64).prop_map(|t| vec![t]).boxed(),
        FamilyKind::Poisson => (-2.0..1.5f64).prop_map(|t| vec![t]).boxed(),
        FamilyKind::Bernoulli => (-4.0..4.0f64).prop_map(|t| vec![t]).boxed(),
        FamilyKind::Normal1D => (0.3..3.0f64, -2.0..2.0f64).prop_map(|(a, b)| vec![a, b]).boxed(),
        FamilyKind::CenteredNormalND => (0.5..3.0f64, 0.5..3.0f64, -0.4..0.4f64)
            .prop_map(|(a, b, r)| linalg::pack_sym(&[a, r * a.min(b), r * a.min(b), b], 2))
            .boxed(),
    }
}

pub fn any_kind() -> impl Strategy<Value = FamilyKind> {
    prop::sample::select(vec![
        FamilyKind::Exponential,
        FamilyKind::Poisson,
        FamilyKind::Bernoulli,
        FamilyKind::CenteredNormal1D,
        FamilyKind::Normal1D,
        FamilyKind::CenteredNormalND,
    ])
}

pub fn one_d_kind() -> impl Strategy<Value = FamilyKind> {
    prop::sample::select(ONE_D.to_vec())
}

/// A family with two of its parameters.
pub fn pair(kinds: impl Strategy<Value = FamilyKind>) -> impl Strategy<Value = (FamilyModel, Param, Param)> {
    kinds.prop_flat_map(|k| (Just(k), coords(k), coords(k))).prop_map(|(k, a, b)| {
        let m = model(k);
        let (p, q) = (m.param(a).unwrap(), m.param(b).unwrap());
        (m, p, q)
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
