//! Statistical divergences computed directly from density evaluations.
//!
//! Nothing here uses a cumulant, partition function or gradient: every value
//! is an integral (or sum) of pointwise density evaluations against the
//! reference measure, so these functions serve as an independent check of
//! the parameter-side closed forms in [`crate::divergences`].
//!
//! Integrands are assembled from log-densities and exponentiated last.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::divergences::Skew;
use crate::error::{Error, Result};
use crate::family::{FamilyModel, Support};
use crate::param::NaturalParam;
use crate::quadrature::{integrate, tag_of, Integral, IntegrationScheme};
use crate::scalar::{c, Real};

type LnFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// A non-negative density with respect to a support's reference measure,
/// represented by its logarithm (`-inf` where the density vanishes).
#[derive(Clone)]
pub struct DensityFn<T> {
    ln_eval: LnFn<T>,
    support: Support<T>,
    normalized: bool,
}

impl<T> fmt::Debug for DensityFn<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFn")
            .field("support", &self.support)
            .field("normalized", &self.normalized)
            .finish_non_exhaustive()
    }
}

impl<T: Real> DensityFn<T> {
    pub fn new<L>(ln_eval: L, support: Support<T>, normalized: bool) -> Self
    where
        L: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        Self { ln_eval: Arc::new(ln_eval), support, normalized }
    }

    /// `p~_theta(x) = exp(<theta, t(x)>)`.
    pub fn unnormalized(model: &FamilyModel, theta: &NaturalParam<T>) -> Result<Self> {
        model.cumulant(theta)?;
        let m = *model;
        let th = theta.coords().to_vec();
        Ok(Self::new(
            move |x: &[T]| m.ln_unnormalized_raw(&th, x),
            model.support_at(theta),
            false,
        ))
    }

    /// `p_theta(x) = exp(<theta, t(x)> - F(theta))`.
    pub fn normalized(model: &FamilyModel, theta: &NaturalParam<T>) -> Result<Self> {
        let f = model.cumulant(theta)?;
        let m = *model;
        let th = theta.coords().to_vec();
        Ok(Self::new(
            move |x: &[T]| m.ln_unnormalized_raw(&th, x) - f,
            model.support_at(theta),
            true,
        ))
    }

    /// `lambda * self`, which is no longer normalized unless `lambda = 1`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor {lambda} must be positive")));
        }
        let inner = self.ln_eval.clone();
        let shift = lambda.ln();
        Ok(Self {
            ln_eval: Arc::new(move |x: &[T]| inner(x) + shift),
            support: self.support,
            normalized: self.normalized && lambda == T::one(),
        })
    }

    pub fn ln_eval(&self, x: &[T]) -> T {
        if self.support.contains(x) {
            (self.ln_eval)(x)
        } else {
            T::neg_infinity()
        }
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.ln_eval(x).exp()
    }

    pub fn support(&self) -> &Support<T> {
        &self.support
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

/// Common support of two densities, with the broader scale hint.
fn joint_support<T: Real>(p: &DensityFn<T>, q: &DensityFn<T>) -> Result<Support<T>> {
    let same = match (p.support, q.support) {
        (Support::HalfLine { .. }, Support::HalfLine { .. })
        | (Support::RealLine { .. }, Support::RealLine { .. })
        | (Support::Binary, Support::Binary) => true,
        (Support::RealSpace { dim: a, .. }, Support::RealSpace { dim: b, .. }) => a == b,
        (Support::Naturals { measure: a }, Support::Naturals { measure: b }) => a == b,
        _ => false,
    };
    if !same {
        return Err(Error::Inconsistent(format!(
            "densities live on different supports: {:?} vs {:?}",
            p.support, q.support
        )));
    }
    Ok(p.support.with_scale(p.support.scale().max(q.support.scale())))
}

fn run<T: Real, F: Fn(&[T]) -> T>(
    f: F,
    support: &Support<T>,
    scheme: &IntegrationScheme,
    tag: &str,
) -> Result<T> {
    integrate(f, support, &scheme.tagged(tag_of(tag))).map(|r| r.value)
}

/// `int p~ dmu`.
pub fn mass<T: Real>(p: &DensityFn<T>, scheme: &IntegrationScheme) -> Result<Integral<T>> {
    integrate(|x: &[T]| p.eval(x), &p.support, &scheme.tagged(tag_of("mass")))
}

/// `int p~ g dmu`.
pub fn expectation<T: Real, G: Fn(&[T]) -> T>(
    p: &DensityFn<T>,
    g: G,
    scheme: &IntegrationScheme,
) -> Result<T> {
    run(
        |x: &[T]| {
            let px = p.eval(x);
            if px == T::zero() {
                T::zero()
            } else {
                px * g(x)
            }
        },
        &p.support,
        scheme,
        "expectation",
    )
}

/// Shannon entropy `-int p log p dmu` of a density (relative to the support's
/// reference measure).
pub fn shannon_entropy<T: Real>(p: &DensityFn<T>, scheme: &IntegrationScheme) -> Result<T> {
    run(
        |x: &[T]| {
            let l = p.ln_eval(x);
            if l == T::neg_infinity() {
                T::zero()
            } else {
                -l.exp() * l
            }
        },
        &p.support,
        scheme,
        "shannon-entropy",
    )
}

fn check_alpha<T: Real>(alpha: T, closed: bool) -> Result<()> {
    let ok = if closed {
        alpha >= T::zero() && alpha <= T::one()
    } else {
        alpha > T::zero() && alpha < T::one()
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSkew(alpha.as_f64()))
    }
}

/// Bhattacharyya coefficient `int p^alpha q^(1-alpha) dmu`.
pub fn bhattacharyya_coeff<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    alpha: T,
    scheme: &IntegrationScheme,
) -> Result<T> {
    check_alpha(alpha, true)?;
    let support = joint_support(p, q)?;
    let beta = T::one() - alpha;
    run(
        |x: &[T]| {
            let (lp, lq) = (p.ln_eval(x), q.ln_eval(x));
            if lp == T::neg_infinity() || lq == T::neg_infinity() {
                return T::zero();
            }
            (alpha * lp + beta * lq).exp()
        },
        &support,
        scheme,
        "bhattacharyya",
    )
}

/// Scaled skewed Bhattacharyya distance `-log rho_alpha / (alpha (1-alpha))`,
/// continuous at the endpoints: `alpha = 1` gives `KL(p:q)`, `alpha = 0` gives
/// `KL(q:p)`. The endpoints need normalized inputs.
pub fn bhattacharyya_scaled<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    alpha: T,
    scheme: &IntegrationScheme,
) -> Result<T> {
    check_alpha(alpha, true)?;
    let skew = Skew::from_alpha(alpha);
    if matches!(skew, Skew::Limit0 | Skew::Limit1) && !(p.normalized && q.normalized) {
        return Err(Error::InvalidArgument(
            "endpoint Bhattacharyya distances are defined for normalized densities".into(),
        ));
    }
    match skew {
        Skew::Limit1 => kl_extended(p, q, scheme),
        Skew::Limit0 => kl_extended(q, p, scheme),
        _ => {
            let rho = bhattacharyya_coeff(p, q, alpha, scheme)?;
            Ok(-rho.ln() / (alpha * (T::one() - alpha)))
        }
    }
}

/// Renyi divergence `log(int p^alpha q^(1-alpha) dmu) / (alpha - 1)`.
pub fn renyi_div<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    alpha: T,
    scheme: &IntegrationScheme,
) -> Result<T> {
    check_alpha(alpha, false)?;
    let rho = bhattacharyya_coeff(p, q, alpha, scheme)?;
    Ok(rho.ln() / (alpha - T::one()))
}

/// Pointwise `p log(p/q) + q - p` from log-densities, written so that neither
/// cancellation nor overflow occurs when one density dominates.
fn kl_pointwise<T: Real>(lp: T, lq: T) -> T {
    let ninf = T::neg_infinity();
    match (lp == ninf, lq == ninf) {
        (true, true) => T::zero(),
        (true, false) => lq.exp(),
        (false, true) => T::infinity(),
        (false, false) => {
            let d = lp - lq;
            if d <= T::zero() {
                lq.exp() * (d * d.exp() - d.exp_m1())
            } else {
                lp.exp() * (d + (-d).exp_m1())
            }
        }
    }
}

/// Extended Kullback-Leibler divergence `int (p~ log(p~/q~) + q~ - p~) dmu`.
pub fn kl_extended<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    scheme: &IntegrationScheme,
) -> Result<T> {
    let support = joint_support(p, q)?;
    run(
        |x: &[T]| kl_pointwise(p.ln_eval(x), q.ln_eval(x)),
        &support,
        scheme,
        "kl-extended",
    )
}

/// Pointwise `(alpha p + (1-alpha) q - p^alpha q^(1-alpha))`, unscaled.
fn alpha_pointwise<T: Real>(lp: T, lq: T, alpha: T) -> T {
    let ninf = T::neg_infinity();
    let beta = T::one() - alpha;
    match (lp == ninf, lq == ninf) {
        (true, true) => T::zero(),
        (true, false) => beta * lq.exp(),
        (false, true) => alpha * lp.exp(),
        (false, false) => {
            let d = lp - lq;
            if d <= T::zero() {
                lq.exp() * (alpha * d.exp_m1() - (alpha * d).exp_m1())
            } else {
                lp.exp() * (beta * (-d).exp_m1() - (-beta * d).exp_m1())
            }
        }
    }
}

/// Alpha-divergence between positive densities:
/// `int (alpha p~ + (1-alpha) q~ - p~^alpha q~^(1-alpha)) dmu / (alpha (1-alpha))`,
/// with `KL(p~:q~)` at `alpha = 1`, `KL(q~:p~)` at `alpha = 0` and four times
/// the squared Hellinger distance at `alpha = 1/2`.
pub fn alpha_div<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    alpha: T,
    scheme: &IntegrationScheme,
) -> Result<T> {
    check_alpha(alpha, true)?;
    match Skew::from_alpha(alpha) {
        Skew::Limit1 => kl_extended(p, q, scheme),
        Skew::Limit0 => kl_extended(q, p, scheme),
        Skew::Half => Ok(c::<T>(4.0) * hellinger_sq(p, q, scheme)?),
        Skew::General(a) => {
            let support = joint_support(p, q)?;
            let v = run(
                |x: &[T]| alpha_pointwise(p.ln_eval(x), q.ln_eval(x), a),
                &support,
                scheme,
                "alpha-div",
            )?;
            Ok(v / (a * (T::one() - a)))
        }
    }
}

/// Squared Hellinger distance `1/2 int (sqrt p~ - sqrt q~)^2 dmu`.
pub fn hellinger_sq<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    scheme: &IntegrationScheme,
) -> Result<T> {
    let support = joint_support(p, q)?;
    let half = c::<T>(0.5);
    run(
        |x: &[T]| {
            let (lp, lq) = (p.ln_eval(x), q.ln_eval(x));
            let ninf = T::neg_infinity();
            match (lp == ninf, lq == ninf) {
                (true, true) => T::zero(),
                (true, false) => half * lq.exp(),
                (false, true) => half * lp.exp(),
                (false, false) => {
                    let d = lp - lq;
                    if d <= T::zero() {
                        let e = (half * d).exp_m1();
                        half * lq.exp() * e * e
                    } else {
                        let e = (-half * d).exp_m1();
                        half * lp.exp() * e * e
                    }
                }
            }
        },
        &support,
        scheme,
        "hellinger",
    )
}

/// Extended cross-entropy `int (p~ log(1/q~) + q~) dmu - 1`.
pub fn cross_entropy_extended<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    scheme: &IntegrationScheme,
) -> Result<T> {
    let support = joint_support(p, q)?;
    let v = run(
        |x: &[T]| {
            let (lp, lq) = (p.ln_eval(x), q.ln_eval(x));
            let ninf = T::neg_infinity();
            match (lp == ninf, lq == ninf) {
                (true, true) => T::zero(),
                (false, true) => T::infinity(),
                (true, false) => lq.exp(),
                (false, false) => lq.exp() - lp.exp() * lq,
            }
        },
        &support,
        scheme,
        "cross-entropy",
    )?;
    Ok(v - T::one())
}

/// Extended entropy `H(p~) = H^x(p~ : p~)`.
pub fn entropy_extended<T: Real>(p: &DensityFn<T>, scheme: &IntegrationScheme) -> Result<T> {
    cross_entropy_extended(p, p, scheme)
}

/// Extended KL divergence written through the normalized densities:
/// `Zp (KL(p:q) + log(Zp/Zq)) + Zq - Zp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KlDecomposition<T> {
    pub zp: T,
    pub zq: T,
    /// `KL(p:q)` between the normalized densities.
    pub kl_normalized: T,
    pub total: T,
}

pub fn klekl_decomposition<T: Real>(
    p: &DensityFn<T>,
    q: &DensityFn<T>,
    scheme: &IntegrationScheme,
) -> Result<KlDecomposition<T>> {
    let support = joint_support(p, q)?;
    let zp = run(|x: &[T]| p.eval(x), &support, scheme, "mass-p")?;
    let zq = run(|x: &[T]| q.eval(x), &support, scheme, "mass-q")?;
    if !(zp > T::zero() && zq > T::zero()) {
        return Err(Error::InvalidArgument("densities must have positive mass".into()));
    }
    let (lzp, lzq) = (zp.ln(), zq.ln());
    let kl_normalized = run(
        |x: &[T]| kl_pointwise(p.ln_eval(x) - lzp, q.ln_eval(x) - lzq),
        &support,
        scheme,
        "kl-normalized",
    )?;
    let total = zp * (kl_normalized + lzp - lzq) + zq - zp;
    Ok(KlDecomposition { zp, zq, kl_normalized, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_family, FamilyKind};

    fn sch() -> IntegrationScheme {
        IntegrationScheme::default()
    }

    fn exp_pair(normalized: bool) -> (DensityFn<f64>, DensityFn<f64>) {
        let m = make_family(FamilyKind::Exponential, 1).unwrap();
        let t1 = NaturalParam::scalar(1.0).unwrap();
        let t2 = NaturalParam::scalar(2.0).unwrap();
        if normalized {
            (DensityFn::normalized(&m, &t1).unwrap(), DensityFn::normalized(&m, &t2).unwrap())
        } else {
            (DensityFn::unnormalized(&m, &t1).unwrap(), DensityFn::unnormalized(&m, &t2).unwrap())
        }
    }

    fn cn(sigma: f64, normalized: bool) -> DensityFn<f64> {
        let m = make_family(FamilyKind::CenteredNormal1D, 1).unwrap();
        let th = NaturalParam::scalar(1.0 / (sigma * sigma)).unwrap();
        if normalized {
            DensityFn::normalized(&m, &th).unwrap()
        } else {
            DensityFn::unnormalized(&m, &th).unwrap()
        }
    }

    #[test]
    fn bhattacharyya_exponential() {
        let (p, q) = exp_pair(true);
        let rho = bhattacharyya_coeff(&p, &q, 0.5, &sch()).unwrap();
        assert!((rho - 2f64.sqrt() / 1.5).abs() < 1e-10);
        assert!((bhattacharyya_coeff(&p, &p, 0.3, &sch()).unwrap() - 1.0).abs() < 1e-10);
        let s = bhattacharyya_scaled(&p, &q, 0.5, &sch()).unwrap();
        assert!((s - 4.0 * (1.5 / 2f64.sqrt()).ln()).abs() < 1e-9);
        let kl = bhattacharyya_scaled(&p, &q, 1.0, &sch()).unwrap();
        assert!((kl - (1.0 - 2f64.ln())).abs() < 1e-9);
        let (pu, qu) = exp_pair(false);
        assert!(bhattacharyya_scaled(&pu, &qu, 0.0, &sch()).is_err());
    }

    #[test]
    fn renyi_matches_scaled_bhattacharyya() {
        let (p, q) = exp_pair(true);
        for a in [0.2, 0.5, 0.8] {
            let r = renyi_div(&p, &q, a, &sch()).unwrap();
            let b = bhattacharyya_scaled(&p, &q, a, &sch()).unwrap();
            assert!((b - r / a).abs() < 1e-10);
        }
        let near = renyi_div(&p, &q, 0.999, &sch()).unwrap();
        let kl = kl_extended(&p, &q, &sch()).unwrap();
        assert!((near - kl).abs() < 1e-3);
        assert!(renyi_div(&p, &q, 1.0, &sch()).is_err());
    }

    #[test]
    fn unnormalized_exponential_values() {
        let (p, q) = exp_pair(false);
        assert!((kl_extended(&p, &q, &sch()).unwrap() - 0.5).abs() < 1e-10);
        assert!((hellinger_sq(&p, &q, &sch()).unwrap() - 1.0 / 12.0).abs() < 1e-10);
        assert!((alpha_div(&p, &q, 0.5, &sch()).unwrap() - 1.0 / 3.0).abs() < 1e-10);
        let h = entropy_extended(&p, &sch()).unwrap();
        assert!((h - 1.0).abs() < 1e-10);
        let hx = cross_entropy_extended(&p, &q, &sch()).unwrap();
        assert!((hx - h - 0.5).abs() < 1e-9);
        let d = klekl_decomposition(&p, &q, &sch()).unwrap();
        assert!((d.zp - 1.0).abs() < 1e-10 && (d.zq - 0.5).abs() < 1e-10);
        assert!((d.total - 0.5).abs() < 1e-9);
    }

    #[test]
    fn alpha_div_branches_and_homogeneity() {
        let (p, q) = exp_pair(false);
        let kl = kl_extended(&p, &q, &sch()).unwrap();
        let rkl = kl_extended(&q, &p, &sch()).unwrap();
        assert_eq!(alpha_div(&p, &q, 1.0, &sch()).unwrap(), kl);
        assert_eq!(alpha_div(&p, &q, 0.0, &sch()).unwrap(), rkl);
        let near = alpha_div(&p, &q, 1.0 - 1e-6, &sch()).unwrap();
        assert!((near - kl).abs() < 1e-5);
        for a in [0.1, 0.37, 0.5, 0.9] {
            let d = alpha_div(&p, &q, a, &sch()).unwrap();
            let d3 = alpha_div(&p.scaled(3.0).unwrap(), &q.scaled(3.0).unwrap(), a, &sch()).unwrap();
            assert!(d >= 0.0);
            assert!((d3 - 3.0 * d).abs() < 1e-10, "{a}: {d3} vs {}", 3.0 * d);
        }
    }

    #[test]
    fn centered_normal_closed_forms() {
        let r = (std::f64::consts::PI / 2.0).sqrt();
        let (p, q) = (cn(1.0, false), cn(2.0, false));
        let kl = kl_extended(&p, &q, &sch()).unwrap();
        assert!((kl - 1.25 * r).abs() < 1e-8, "{kl}");
        let h = hellinger_sq(&p, &q, &sch()).unwrap();
        let expect = 3.0 * r - 2.0 * std::f64::consts::PI.sqrt() * 2.0 / 5f64.sqrt();
        assert!((h - expect).abs() < 1e-8, "{h} vs {expect}");
        let same = bhattacharyya_coeff(&cn(1.3, true), &cn(1.3, true), 0.5, &sch()).unwrap();
        assert!((same - 1.0).abs() < 1e-10);
    }

    #[test]
    fn discrete_supports() {
        let m = make_family(FamilyKind::Poisson, 1).unwrap();
        let p = DensityFn::normalized(&m, &NaturalParam::scalar(0.0).unwrap()).unwrap();
        let z: Integral<f64> = mass(&p, &sch()).unwrap();
        assert!((z.value - 1.0).abs() < 1e-12);
        let b = make_family(FamilyKind::Bernoulli, 1).unwrap();
        let p = DensityFn::normalized(&b, &NaturalParam::scalar(0.3).unwrap()).unwrap();
        assert!((mass(&p, &sch()).unwrap().value - 1.0f64).abs() < 1e-15);
    }

    #[test]
    fn mismatched_supports_are_rejected() {
        let (p, _) = exp_pair(true);
        let q = cn(1.0, true);
        assert!(matches!(kl_extended(&p, &q, &sch()), Err(Error::Inconsistent(_))));
    }
}
