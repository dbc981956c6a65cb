//! Parameter-side divergences induced by a convex generator.
//!
//! Everything here works on natural parameters only; the density-side
//! counterparts live in [`crate::oracle`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyModel;
use crate::generator::GeneratorFn;
use crate::param::{DualParam, NaturalParam};
use crate::scalar::{c, to_f64_vec, Real};

/// Skew parameter of the scaled Jensen family.
///
/// The limit and midpoint branches are explicit variants so that branch
/// selection never depends on floating-point equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "kebab-case")]
pub enum Skew<T> {
    /// Forward Bregman divergence `B(theta1 : theta2)`.
    Limit0,
    /// Reverse Bregman divergence `B(theta2 : theta1)`.
    Limit1,
    /// Four times the symmetric Jensen divergence.
    Half,
    General(T),
}

impl<T: Real> Skew<T> {
    /// Map an exact `0`, `1/2` or `1` onto its branch.
    pub fn from_alpha(alpha: T) -> Self {
        if alpha == T::zero() {
            Skew::Limit0
        } else if alpha == T::one() {
            Skew::Limit1
        } else if alpha == c(0.5) {
            Skew::Half
        } else {
            Skew::General(alpha)
        }
    }

    pub fn alpha(&self) -> T {
        match *self {
            Skew::Limit0 => T::zero(),
            Skew::Limit1 => T::one(),
            Skew::Half => c(0.5),
            Skew::General(a) => a,
        }
    }
}

/// Normalization applied to the skewed Jensen divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JensenScaling {
    /// Divide by `alpha (1 - alpha)`.
    #[default]
    Standard,
    /// Multiply by `kappa(alpha) = 1 / (alpha (1 - alpha) 4^(4 alpha (1 - alpha)))`,
    /// which leaves the symmetric Jensen divergence unchanged at `1/2`.
    Kappa,
}

/// `kappa(alpha) = 1 / (alpha (1-alpha) 4^(4 alpha (1-alpha)))`.
pub fn kappa<T: Real>(alpha: T) -> T {
    let w = alpha * (T::one() - alpha);
    T::one() / (w * c::<T>(4.0).powf(c::<T>(4.0) * w))
}

fn same_len<T: Real>(a: &NaturalParam<T>, b: &NaturalParam<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Bregman divergence `B_G(theta1 : theta2) = G(theta1) - G(theta2) - <theta1 - theta2, grad G(theta2)>`.
pub fn bregman<T: Real>(
    gen: &GeneratorFn<T>,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
) -> Result<T> {
    same_len(theta1, theta2)?;
    let g1 = gen.value(theta1)?;
    let g2 = gen.value(theta2)?;
    let grad = gen.gradient(theta2)?;
    let diff = theta1.sub(theta2);
    Ok(g1 - g2 - gen.layout().inner(&diff, grad.coords()))
}

/// Signed Jensen gap `alpha G(theta1) + (1-alpha) G(theta2) - G(mix)` for any
/// real `alpha` whose mixture stays in the domain.
fn jensen_gap<T: Real>(
    gen: &GeneratorFn<T>,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    alpha: T,
) -> Result<T> {
    same_len(theta1, theta2)?;
    let g1 = gen.value(theta1)?;
    let g2 = gen.value(theta2)?;
    let mid = gen.value(&theta1.mix(theta2, alpha))?;
    Ok(g2 + alpha * (g1 - g2) - mid)
}

/// Skewed Jensen divergence `J_{G,alpha}(theta1 : theta2)` for `alpha` in `(0, 1)`.
pub fn jensen_skewed<T: Real>(
    gen: &GeneratorFn<T>,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    alpha: T,
) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidSkew(alpha.as_f64()));
    }
    jensen_gap(gen, theta1, theta2, alpha)
}

/// Scaled skewed Jensen divergence, extended by its Bregman limits.
pub fn jensen_scaled<T: Real>(
    gen: &GeneratorFn<T>,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    skew: Skew<T>,
) -> Result<T> {
    jensen_scaled_with(gen, theta1, theta2, skew, JensenScaling::Standard)
}

pub fn jensen_scaled_with<T: Real>(
    gen: &GeneratorFn<T>,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    skew: Skew<T>,
    scaling: JensenScaling,
) -> Result<T> {
    match skew {
        // 4^(4 alpha (1-alpha)) -> 1 at both ends, so the limits coincide.
        Skew::Limit0 => bregman(gen, theta1, theta2),
        Skew::Limit1 => bregman(gen, theta2, theta1),
        Skew::Half => {
            let j = jensen_gap(gen, theta1, theta2, c(0.5))?;
            Ok(match scaling {
                JensenScaling::Standard => c::<T>(4.0) * j,
                JensenScaling::Kappa => j,
            })
        }
        Skew::General(alpha) => {
            let w = alpha * (T::one() - alpha);
            if w == T::zero() || !alpha.is_finite() {
                return Err(Error::InvalidSkew(alpha.as_f64()));
            }
            let j = jensen_gap(gen, theta1, theta2, alpha)?;
            Ok(match scaling {
                JensenScaling::Standard => j / w,
                JensenScaling::Kappa => kappa(alpha) * j,
            })
        }
    }
}

/// Fenchel-Young divergence `F(theta) + F*(eta) - <theta, eta>`.
pub fn fenchel_young<T: Real>(
    primal: &GeneratorFn<T>,
    dual: &GeneratorFn<T>,
    theta: &NaturalParam<T>,
    eta: &DualParam<T>,
) -> Result<T> {
    if theta.len() != eta.coords().len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: eta.coords().len(),
        });
    }
    let f = primal.value(theta)?;
    let fstar = dual.value_at(eta.coords())?;
    Ok(f + fstar - theta.inner(eta.coords()))
}

/// Duo Bregman pseudo-divergence
/// `B_{F1,F2}(theta1 : theta2) = F1(theta1) - F2(theta2) - <theta1 - theta2, grad F2(theta2)>`.
///
/// Requires `F1 >= F2`; the ordering is checked on both generators' seed
/// grids and on the two arguments.
pub fn duo_bregman<T: Real>(
    upper: &GeneratorFn<T>,
    lower: &GeneratorFn<T>,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
) -> Result<T> {
    same_len(theta1, theta2)?;
    let slack = c::<T>(1e-12);
    let probes = upper
        .seeds()
        .iter()
        .chain(lower.seeds())
        .map(|v| v.as_slice())
        .chain([theta1.coords(), theta2.coords()]);
    for x in probes {
        if !(upper.contains(x) && lower.contains(x)) {
            continue;
        }
        let gap = upper.value_at(x)? - lower.value_at(x)?;
        if gap < -slack * (T::one() + gap.abs()) {
            return Err(Error::GeneratorOrder {
                gap: gap.as_f64(),
                at: to_f64_vec(x),
            });
        }
    }
    let f1 = upper.value(theta1)?;
    let f2 = lower.value(theta2)?;
    let grad = lower.gradient(theta2)?;
    let diff = theta1.sub(theta2);
    Ok(f1 - f2 - lower.layout().inner(&diff, grad.coords()))
}

/// Scalar extended KL divergence `a log(a/b) + b - a`.
pub fn scalar_kl<T: Real>(a: T, b: T) -> Result<T> {
    if !(a > T::zero() && b > T::zero()) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scalar KL needs positive arguments, got ({}, {})",
            a, b
        )));
    }
    Ok(a * (a / b).ln() + b - a)
}

/// Split of `B_Z(theta2 : theta1)` into a conformal cumulant divergence and a
/// scalar divergence between the partition values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BzDecomposition<T> {
    /// `Z(theta1) B_F(theta2 : theta1)`
    pub conformal: T,
    /// `D_skl(Z(theta1) : Z(theta2))`
    pub scalar: T,
    pub total: T,
}

pub fn bz_decomposition<T: Real>(
    model: &FamilyModel,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
) -> Result<BzDecomposition<T>> {
    let f = GeneratorFn::cumulant(model);
    let z1 = model.partition(theta1)?;
    let z2 = model.partition(theta2)?;
    let conformal = z1 * bregman(&f, theta2, theta1)?;
    let scalar = scalar_kl(z1, z2)?;
    Ok(BzDecomposition {
        conformal,
        scalar,
        total: conformal + scalar,
    })
}

/// Alpha-divergence between the normalized `p_theta1` and the unnormalized
/// `p~_theta2`:
/// `(alpha + (1-alpha) Z(theta2) - Z(mix) / Z(theta1)^alpha) / (alpha (1-alpha))`.
pub fn mixed_alpha_div<T: Real>(
    model: &FamilyModel,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    alpha: T,
) -> Result<T> {
    let w = alpha * (T::one() - alpha);
    if w == T::zero() || !alpha.is_finite() {
        return Err(Error::InvalidSkew(alpha.as_f64()));
    }
    // int p^a p~^(1-a) = Z(mix) exp(-a F(theta1))
    let z2 = model.partition(theta2)?;
    let mix = checked_mix(model, theta1, theta2, alpha)?;
    let overlap = (model.cumulant(&mix)? - alpha * model.cumulant(theta1)?).exp();
    Ok((alpha + (T::one() - alpha) * z2 - overlap) / w)
}

/// Signed skewed Bhattacharyya distance `-log int p^alpha p~^(1-alpha)` between
/// the normalized `p_theta1` and the unnormalized `p~_theta2`.
pub fn mixed_bhattacharyya<T: Real>(
    model: &FamilyModel,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    alpha: T,
) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidSkew(alpha.as_f64()));
    }
    let mix = checked_mix(model, theta1, theta2, alpha)?;
    Ok(alpha * model.cumulant(theta1)? - model.cumulant(&mix)?)
}

fn checked_mix<T: Real>(
    model: &FamilyModel,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    alpha: T,
) -> Result<NaturalParam<T>> {
    same_len(theta1, theta2)?;
    let mix = theta1.mix(theta2, alpha);
    if !model.in_domain(mix.coords()) {
        return Err(model.domain_error(mix.coords()));
    }
    Ok(mix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_family, FamilyKind};

    fn exp_model() -> FamilyModel {
        make_family(FamilyKind::Exponential, 1).unwrap()
    }

    fn s(x: f64) -> NaturalParam<f64> {
        NaturalParam::scalar(x).unwrap()
    }

    #[test]
    fn bregman_on_exponential_partition() {
        let z = GeneratorFn::partition(&exp_model());
        // (l1 - l2)^2 / (l2 l1^2) at l1 = 1, l2 = 2
        assert!((bregman(&z, &s(2.0), &s(1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((bregman(&z, &s(1.0), &s(2.0)).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(bregman(&z, &s(1.3), &s(1.3)).unwrap(), 0.0);
    }

    #[test]
    fn jensen_values() {
        let m = exp_model();
        let z = GeneratorFn::partition(&m);
        let f = GeneratorFn::cumulant(&m);
        let j = jensen_skewed(&z, &s(1.0), &s(2.0), 0.5).unwrap();
        assert!((j - 1.0 / 12.0).abs() < 1e-15);
        let js = jensen_scaled(&z, &s(1.0), &s(2.0), Skew::Half).unwrap();
        assert!((js - 1.0 / 3.0).abs() < 1e-15);
        let general = jensen_scaled(&z, &s(1.0), &s(2.0), Skew::General(0.5)).unwrap();
        assert!((general - js).abs() < 1e-15);
        let j1 = jensen_scaled(&z, &s(1.0), &s(2.0), Skew::Limit1).unwrap();
        assert!((j1 - 0.5).abs() < 1e-15);
        let jf = jensen_scaled(&f, &s(1.0), &s(2.0), Skew::Half).unwrap();
        assert!((jf - 4.0 * (1.5 / 2f64.sqrt()).ln()).abs() < 1e-14);
        assert!(jensen_skewed(&z, &s(1.0), &s(2.0), 1.0).is_err());
        assert!(jensen_scaled(&z, &s(1.0), &s(2.0), Skew::General(0.0)).is_err());
    }

    #[test]
    fn skew_branch_selection_is_exact() {
        assert_eq!(Skew::from_alpha(0.0), Skew::Limit0);
        assert_eq!(Skew::from_alpha(1.0), Skew::Limit1);
        assert_eq!(Skew::from_alpha(0.5), Skew::Half);
        assert_eq!(Skew::from_alpha(0.5 + 1e-16), Skew::General(0.5 + 1e-16));
        assert_eq!(Skew::from_alpha(1.0 - 1e-12), Skew::General(1.0 - 1e-12));
    }

    #[test]
    fn kappa_scaling_at_half_is_plain_jensen() {
        assert_eq!(kappa(0.5_f64), 1.0);
        let z = GeneratorFn::partition(&exp_model());
        let a = jensen_scaled_with(&z, &s(1.0), &s(2.0), Skew::Half, JensenScaling::Kappa).unwrap();
        let b = jensen_skewed(&z, &s(1.0), &s(2.0), 0.5).unwrap();
        assert_eq!(a, b);
        let g = jensen_scaled_with(&z, &s(1.0), &s(2.0), Skew::General(0.5), JensenScaling::Kappa)
            .unwrap();
        assert!((g - b).abs() < 1e-16);
    }

    #[test]
    fn scalar_kl_values() {
        assert_eq!(scalar_kl(1.0, 1.0).unwrap(), 0.0);
        assert!((scalar_kl(1.0, 2.0).unwrap() - (0.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!((scalar_kl(2.0, 1.0).unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!(scalar_kl(0.0, 1.0).is_err());
    }

    #[test]
    fn decomposition_closes() {
        let m = exp_model();
        let d = bz_decomposition(&m, &s(1.0), &s(2.0)).unwrap();
        assert!((d.total - 0.5).abs() < 1e-15);
        assert!(d.conformal >= 0.0 && d.scalar >= 0.0);
        let d0 = bz_decomposition(&m, &s(1.7), &s(1.7)).unwrap();
        assert_eq!((d0.conformal, d0.scalar, d0.total), (0.0, 0.0, 0.0));

        // sqrt(pi/2)(2 s2 - 3 s1 + s1^3/s2^2) at s1 = 1, s2 = 1/2
        let cn = make_family(FamilyKind::CenteredNormal1D, 1).unwrap();
        let expected = std::f64::consts::FRAC_PI_2.sqrt() * (1.0 - 3.0 + 4.0);
        let d = bz_decomposition(&cn, &s(1.0), &s(4.0)).unwrap();
        assert!((d.total - expected).abs() < 1e-14);
        let z = GeneratorFn::partition(&cn);
        assert!((bregman(&z, &s(4.0), &s(1.0)).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn fenchel_young_equals_bregman() {
        let m = exp_model();
        let f = GeneratorFn::cumulant(&m);
        // closed-form conjugate of -log(theta): -1 - log(-eta)
        let fstar = GeneratorFn::scalar("F*", |e: f64| -1.0 - (-e).ln(), |e| e < 0.0);
        let eta = m.grad_cumulant(&s(2.0)).unwrap();
        let y = fenchel_young(&f, &fstar, &s(1.0), &eta).unwrap();
        assert!((y - (2f64.ln() - 0.5)).abs() < 1e-15);
        let eta1 = m.grad_cumulant(&s(1.0)).unwrap();
        assert!(fenchel_young(&f, &fstar, &s(1.0), &eta1).unwrap().abs() < 1e-15);

        let p = make_family(FamilyKind::Poisson, 1).unwrap();
        let f = GeneratorFn::cumulant(&p);
        let fstar = GeneratorFn::scalar("F*", |e: f64| e * e.ln() - e, |e| e > 0.0);
        let eta = p.grad_cumulant(&s(1.0)).unwrap();
        let y = fenchel_young(&f, &fstar, &s(0.0), &eta).unwrap();
        assert!((y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duo_bregman_reduces_and_orders() {
        let m = exp_model();
        let f = GeneratorFn::cumulant(&m);
        let z1 = GeneratorFn::partition_minus_one(&m);
        let a = duo_bregman(&f, &f, &s(1.0), &s(2.0)).unwrap();
        assert_eq!(a, bregman(&f, &s(1.0), &s(2.0)).unwrap());
        // Z(2) - 1 - F(1) - (2 - 1) F'(1) = 0.5 - 1 - 0 + 1
        let v = duo_bregman(&z1, &f, &s(2.0), &s(1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let t = s(0.7);
        let diag = duo_bregman(&z1, &f, &t, &t).unwrap();
        assert!((diag - (1.0 / 0.7 - 1.0 + 0.7f64.ln())).abs() < 1e-15);
        // swapping the generators violates F1 >= F2
        assert!(matches!(
            duo_bregman(&f, &z1, &s(2.0), &s(1.0)),
            Err(Error::GeneratorOrder { .. })
        ));
    }

    #[test]
    fn mixed_divergences() {
        let m = exp_model();
        // 4 (1/2 + 1/2 * 1/2 - int e^{-1.5 x}) = 4 (3/4 - 2/3)
        let v = mixed_alpha_div(&m, &s(1.0), &s(2.0), 0.5).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14, "{v}");
        let v = mixed_alpha_div(&m, &s(2.0), &s(2.0), 0.3).unwrap();
        let expect = (0.3 + 0.7 * 0.5 - 0.5 / 0.5f64.powf(0.3)) / 0.21;
        assert!((v - expect).abs() < 1e-14, "{v}");
        // theta1 = theta2: 4 (1/2 + Z/2 - sqrt Z) = 2 (sqrt Z - 1)^2
        let t = s(1.4);
        let v = mixed_alpha_div(&m, &t, &t, 0.5).unwrap();
        assert!((v - 2.0 * ((1.0 / 1.4f64).sqrt() - 1.0).powi(2)).abs() < 1e-14);
        // -log int e^{-x/2} e^{-x} dx = log 1.5
        let b = mixed_bhattacharyya(&m, &s(1.0), &s(2.0), 0.5).unwrap();
        assert!((b - 1.5f64.ln()).abs() < 1e-15);
        // theta1 = theta2: -(1 - alpha) F(theta)
        let b = mixed_bhattacharyya(&m, &t, &t, 0.3).unwrap();
        assert!((b - 0.7 * 1.4f64.ln()).abs() < 1e-15);
    }
}
