//! Convex conjugation and the dually flat structure of a generator.
//!
//! The conjugate `F*(eta) = <theta*, eta> - F(theta*)` is computed by solving
//! `grad F(theta*) = eta` with a damped Newton iteration on
//! `Phi(theta) = F(theta) - <theta, eta>`, using a finite-difference Jacobian
//! of the gradient. No family-specific closed forms are used, so every
//! result here can be compared against the closed forms elsewhere.

use serde::{Deserialize, Serialize};

use crate::divergences::{bregman, fenchel_young};
use crate::error::{Error, Result};
use crate::family::{FamilyKind, FamilyModel};
use crate::generator::{fd_step, GeneratorFn};
use crate::linalg;
use crate::oracle::{shannon_entropy, DensityFn};
use crate::param::{DualParam, GeneratorTag, Layout, NaturalParam};
use crate::quadrature::IntegrationScheme;
use crate::scalar::{c, to_f64_vec, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Required bound on `|grad F(theta) - eta|`.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 200, max_halvings: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub theta: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

fn residual_norm<T: Real>(g: &[T], target: &[T]) -> T {
    g.iter()
        .zip(target)
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<T>()
        .sqrt()
}

/// Partial derivatives of `Phi(theta) = G(theta) - <theta, target>`.
fn phi_partials<T: Real>(gen: &GeneratorFn<T>, theta: &[T], target: &[T]) -> Result<(Vec<T>, T)> {
    let g = gen.gradient_at(theta)?;
    let layout = gen.layout();
    let r = g
        .iter()
        .zip(target)
        .enumerate()
        .map(|(k, (a, b))| layout.weight::<T>(k) * (*a - *b))
        .collect();
    Ok((r, residual_norm(&g, target)))
}

fn phi<T: Real>(gen: &GeneratorFn<T>, theta: &[T], target: &[T]) -> Result<T> {
    Ok(gen.value_at(theta)? - gen.layout().inner(theta, target))
}

/// Row-major Jacobian of the partials by central differences.
fn jacobian<T: Real>(gen: &GeneratorFn<T>, theta: &[T], target: &[T]) -> Option<Vec<T>> {
    let n = theta.len();
    let mut jac = vec![T::zero(); n * n];
    let mut x = theta.to_vec();
    for j in 0..n {
        let mut h = fd_step(theta[j]);
        let mut column = None;
        for _ in 0..40 {
            x[j] = theta[j] + h;
            let rp = if gen.contains(&x) { phi_partials(gen, &x, target).ok() } else { None };
            x[j] = theta[j] - h;
            let rm = if gen.contains(&x) { phi_partials(gen, &x, target).ok() } else { None };
            x[j] = theta[j];
            if let (Some((rp, _)), Some((rm, _))) = (rp, rm) {
                column = Some((rp, rm));
                break;
            }
            h = h / c(4.0);
        }
        let (rp, rm) = column?;
        for i in 0..n {
            jac[i * n + j] = (rp[i] - rm[i]) / (h + h);
        }
    }
    Some(jac)
}

fn closest_seed<T: Real>(gen: &GeneratorFn<T>, target: &[T]) -> Result<Vec<T>> {
    let mut best: Option<(T, &Vec<T>)> = None;
    for s in gen.seeds() {
        if let Ok(g) = gen.gradient_at(s) {
            let r = residual_norm(&g, target);
            if best.is_none_or(|(b, _)| r < b) {
                best = Some((r, s));
            }
        }
    }
    best.map(|(_, s)| s.clone()).ok_or_else(|| {
        Error::InvalidArgument(format!("generator {} has no usable seed points", gen.name()))
    })
}

/// Solve `grad G(theta) = target` by damped Newton.
///
/// The iteration keeps going past `tol` while it still makes progress, so the
/// returned residual is usually well below the requested bound.
pub fn solve_gradient_equation<T: Real>(
    gen: &GeneratorFn<T>,
    target: &[T],
    seed: Option<&[T]>,
    opts: &SolverOptions,
) -> Result<Solution<T>> {
    if !target.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(to_f64_vec(target)));
    }
    let mut theta = match seed {
        Some(s) => s.to_vec(),
        None => closest_seed(gen, target)?,
    };
    let n = theta.len();
    if target.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: target.len() });
    }
    let tol = c::<T>(opts.tol);
    let polish = tol * c(1e-4);
    let fail = |theta: &[T], iterations: usize, residual: T| Error::NoConvergence {
        what: format!("gradient inversion of {}", gen.name()),
        iterations,
        residual: residual.as_f64(),
        last: to_f64_vec(theta),
    };

    let (mut r, mut res) = phi_partials(gen, &theta, target)?;
    let mut val = phi(gen, &theta, target)?;
    let mut iterations = 0;
    while iterations < opts.max_iterations && res > polish {
        iterations += 1;
        let steepest: Vec<T> = r.iter().map(|v| -*v).collect();
        let mut dir = jacobian(gen, &theta, target)
            .and_then(|j| linalg::solve(&j, &steepest, n))
            .unwrap_or_else(|| steepest.clone());
        let mut slope: T = r.iter().zip(&dir).map(|(a, b)| *a * *b).sum();
        if !(slope < T::zero()) || !dir.iter().all(|v| v.is_finite()) {
            dir = steepest;
            slope = r.iter().zip(&dir).map(|(a, b)| *a * *b).sum();
        }
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<T> = theta.iter().zip(&dir).map(|(x, d)| *x + t * *d).collect();
            if gen.contains(&cand) {
                if let (Ok(v), Ok((rc, resc))) =
                    (phi(gen, &cand, target), phi_partials(gen, &cand, target))
                {
                    let armijo = v <= val + c::<T>(1e-4) * t * slope;
                    if armijo || resc < res {
                        accepted = Some((cand, v, rc, resc));
                        break;
                    }
                }
            }
            t = t * c(0.5);
        }
        match accepted {
            Some((cand, v, rc, resc)) => {
                theta = cand;
                val = v;
                r = rc;
                res = resc;
            }
            // No step improves either criterion: we are at the numerical floor.
            None => break,
        }
    }
    if res <= tol {
        Ok(Solution { theta, residual: res, iterations })
    } else {
        Err(fail(&theta, iterations, res))
    }
}

/// `G*(eta)` by gradient inversion.
pub fn conjugate<T: Real>(gen: &GeneratorFn<T>, eta: &DualParam<T>) -> Result<T> {
    conjugate_at(gen, eta.coords(), &SolverOptions::default())
}

fn conjugate_at<T: Real>(gen: &GeneratorFn<T>, eta: &[T], opts: &SolverOptions) -> Result<T> {
    let sol = solve_gradient_equation(gen, eta, None, opts)?;
    Ok(gen.layout().inner(&sol.theta, eta) - gen.value_at(&sol.theta)?)
}

/// A generator together with its convex conjugate.
#[derive(Debug, Clone)]
pub struct ConjugatePair<T> {
    primal: GeneratorFn<T>,
    dual: GeneratorFn<T>,
}

impl<T: Real> ConjugatePair<T> {
    /// Build the conjugate numerically; the dual domain is the set of `eta`
    /// for which gradient inversion succeeds.
    pub fn new(primal: GeneratorFn<T>) -> Self {
        let opts = SolverOptions::default();
        let (pv, pg, pd) = (primal.clone(), primal.clone(), primal.clone());
        let seeds: Vec<Vec<T>> = primal
            .seeds()
            .iter()
            .filter_map(|s| primal.gradient_at(s).ok())
            .collect();
        let dual = GeneratorFn::new(
            format!("{}*", primal.name()),
            primal.layout(),
            move |eta: &[T]| conjugate_at(&pv, eta, &opts),
            move |eta: &[T]| solve_gradient_equation(&pd, eta, None, &opts).is_ok(),
        )
        .with_gradient(move |eta: &[T]| Ok(solve_gradient_equation(&pg, eta, None, &opts)?.theta))
        .with_tag(GeneratorTag::Other)
        .with_seeds(seeds);
        Self { primal, dual }
    }

    /// Pair with a known conjugate and inverse gradient map.
    pub fn closed(primal: GeneratorFn<T>, dual: GeneratorFn<T>) -> Result<Self> {
        if primal.layout() != dual.layout() {
            return Err(Error::LayoutMismatch {
                expected: primal.layout().name(),
                found: dual.layout().name(),
            });
        }
        Ok(Self { primal, dual })
    }

    pub fn primal(&self) -> &GeneratorFn<T> {
        &self.primal
    }

    pub fn dual(&self) -> &GeneratorFn<T> {
        &self.dual
    }

    pub fn to_dual(&self, theta: &NaturalParam<T>) -> Result<DualParam<T>> {
        self.primal.gradient(theta)
    }

    pub fn to_primal(&self, eta: &DualParam<T>) -> Result<NaturalParam<T>> {
        let theta = self.dual.gradient_at(eta.coords())?;
        NaturalParam::new(theta, self.primal.layout())
    }

    pub fn dual_contains(&self, eta: &[T]) -> bool {
        self.dual.contains(eta)
    }
}

/// `|G**(theta) - G(theta)|`, with both conjugations done numerically.
pub fn double_conjugate_check<T: Real>(gen: &GeneratorFn<T>, theta: &NaturalParam<T>) -> Result<T> {
    let pair = ConjugatePair::new(gen.clone());
    let g = gen.value(theta)?;
    let sol = solve_gradient_equation(pair.dual(), theta.coords(), None, &SolverOptions::default())?;
    let fstar = pair.dual().value_at(&sol.theta)?;
    let g2 = gen.layout().inner(theta.coords(), &sol.theta) - fstar;
    Ok((g2 - g).abs())
}

/// The canonical divergence of a dually flat space, evaluated four ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CanonicalDivergence<T> {
    /// `B_F(theta_p : theta_q)`
    pub bregman_primal: T,
    /// `Y_{F,F*}(theta_p : eta_q)`
    pub fenchel_young_primal: T,
    /// `B_{F*}(eta_q : eta_p)`
    pub bregman_dual: T,
    /// `Y_{F*,F}(eta_q : theta_p)`
    pub fenchel_young_dual: T,
}

impl<T: Real> CanonicalDivergence<T> {
    pub fn routes(&self) -> [T; 4] {
        [
            self.bregman_primal,
            self.fenchel_young_primal,
            self.bregman_dual,
            self.fenchel_young_dual,
        ]
    }

    pub fn value(&self) -> T {
        self.bregman_primal
    }

    /// Largest pairwise disagreement between the routes.
    pub fn spread(&self) -> T {
        let r = self.routes();
        let hi = r.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = r.iter().copied().fold(T::infinity(), T::min);
        hi - lo
    }
}

pub fn canonical_divergence<T: Real>(
    pair: &ConjugatePair<T>,
    theta_p: &NaturalParam<T>,
    theta_q: &NaturalParam<T>,
) -> Result<CanonicalDivergence<T>> {
    let (f, fs) = (pair.primal(), pair.dual());
    let eta_p = pair.to_dual(theta_p)?;
    let eta_q = pair.to_dual(theta_q)?;
    let layout = f.layout();
    let as_point = |eta: &DualParam<T>| NaturalParam::raw(eta.coords().to_vec(), layout);
    let theta_p_dual = DualParam::new(theta_p.coords().to_vec(), GeneratorTag::Other)?;
    Ok(CanonicalDivergence {
        bregman_primal: bregman(f, theta_p, theta_q)?,
        fenchel_young_primal: fenchel_young(f, fs, theta_p, &eta_q)?,
        bregman_dual: bregman(fs, &as_point(&eta_q), &as_point(&eta_p))?,
        fenchel_young_dual: fenchel_young(fs, f, &as_point(&eta_q), &theta_p_dual)?,
    })
}

/// `|F*(grad F(theta)) + H(p_theta)|` with the conjugate from the solver and
/// the entropy from the density oracle.
pub fn negentropy_check<T: Real>(
    model: &FamilyModel,
    theta: &NaturalParam<T>,
    scheme: &IntegrationScheme,
) -> Result<T> {
    let f = GeneratorFn::cumulant(model);
    let eta = f.gradient(theta)?;
    let fstar = conjugate(&f, &eta)?;
    let h = shannon_entropy(&DensityFn::normalized(model, theta)?, scheme)?;
    Ok((fstar + h).abs())
}

/// `Fbar(u) = G(A u + b) + <c, u> + d` on raw coordinates (Euclidean layout).
///
/// `a` is row-major `n x n`.
pub fn affine_reparam<T: Real>(
    gen: &GeneratorFn<T>,
    a: &[T],
    b: &[T],
    cvec: &[T],
    d: T,
) -> Result<GeneratorFn<T>> {
    let n = b.len();
    if a.len() != n * n || cvec.len() != n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    if linalg::solve(a, &vec![T::zero(); n], n).is_none() {
        return Err(Error::InvalidArgument("reparameterization matrix is singular".into()));
    }
    let map = {
        let (a, b) = (a.to_vec(), b.to_vec());
        move |u: &[T]| -> Vec<T> {
            linalg::mat_vec(&a, u, n, n).into_iter().zip(&b).map(|(x, y)| x + *y).collect()
        }
    };
    let (m1, m2, m3) = (map.clone(), map.clone(), map);
    let (g1, g2, g3) = (gen.clone(), gen.clone(), gen.clone());
    let (c1, c2) = (cvec.to_vec(), cvec.to_vec());
    let at = a.to_vec();
    let layout = gen.layout();
    Ok(GeneratorFn::new(
        format!("affine({})", gen.name()),
        Layout::Vector,
        move |u: &[T]| {
            let lin: T = c1.iter().zip(u).map(|(x, y)| *x * *y).sum();
            Ok(g1.value_at(&m1(u))? + lin + d)
        },
        move |u: &[T]| u.len() == n && g3.contains(&m3(u)),
    )
    .with_gradient(move |u: &[T]| {
        let g = g2.gradient_at(&m2(u))?;
        let partials: Vec<T> =
            g.iter().enumerate().map(|(k, v)| layout.weight::<T>(k) * *v).collect();
        Ok(linalg::transpose_mat_vec(&at, &partials, n, n)
            .into_iter()
            .zip(&c2)
            .map(|(x, y)| x + *y)
            .collect())
    }))
}

/// `|B_G(theta1 : theta2) - B_Gbar(thetabar1 : thetabar2)|` where
/// `theta = A thetabar + b`.
#[allow(clippy::too_many_arguments)]
pub fn affine_reparam_check<T: Real>(
    gen: &GeneratorFn<T>,
    a: &[T],
    b: &[T],
    cvec: &[T],
    d: T,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
) -> Result<T> {
    let n = b.len();
    let bar = affine_reparam(gen, a, b, cvec, d)?;
    let pull = |theta: &NaturalParam<T>| -> Result<NaturalParam<T>> {
        let rhs: Vec<T> = theta.coords().iter().zip(b).map(|(x, y)| *x - *y).collect();
        let u = linalg::solve(a, &rhs, n)
            .ok_or_else(|| Error::InvalidArgument("reparameterization matrix is singular".into()))?;
        NaturalParam::vector(u)
    };
    let direct = bregman(gen, theta1, theta2)?;
    let reparam = bregman(&bar, &pull(theta1)?, &pull(theta2)?)?;
    Ok((direct - reparam).abs())
}

/// Directional derivatives of a generator approaching a boundary point of its
/// domain along a fixed inward direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDiagnostic {
    pub distances: Vec<f64>,
    pub derivatives: Vec<f64>,
    /// Derivatives strictly decrease towards the boundary and end negative.
    pub diverging: bool,
}

pub const BOUNDARY_DISTANCES: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// Numerical Legendre-type diagnostic at `boundary + delta * direction`.
/// Informational only: finite sampling cannot certify an asymptotic property.
pub fn boundary_diagnostic<T: Real>(
    gen: &GeneratorFn<T>,
    boundary: &[T],
    direction: &[T],
) -> Result<BoundaryDiagnostic> {
    let mut derivatives = Vec::with_capacity(BOUNDARY_DISTANCES.len());
    for delta in BOUNDARY_DISTANCES {
        let x: Vec<T> = boundary
            .iter()
            .zip(direction)
            .map(|(b, u)| *b + c::<T>(delta) * *u)
            .collect();
        let g = gen.gradient_at(&x)?;
        derivatives.push(gen.layout().inner(&g, direction).as_f64());
    }
    let diverging = derivatives.windows(2).all(|w| w[1] < w[0])
        && derivatives.last().is_some_and(|d| *d < 0.0);
    Ok(BoundaryDiagnostic { distances: BOUNDARY_DISTANCES.to_vec(), derivatives, diverging })
}

/// Inward direction from [`FamilyModel::boundary_point`]; `None` when the
/// natural parameter domain is all of `R^m`.
pub fn family_boundary_direction<T: Real>(model: &FamilyModel) -> Option<(Vec<T>, Vec<T>)> {
    let boundary = model.boundary_point::<T>()?;
    let dir = match model.kind() {
        FamilyKind::CenteredNormalND => {
            let d = model.dim();
            let mut id = vec![T::zero(); d * d];
            for i in 0..d {
                id[i * d + i] = T::one();
            }
            linalg::pack_sym(&id, d)
        }
        _ => {
            let mut v = vec![T::zero(); model.order()];
            v[0] = T::one();
            v
        }
    };
    Some((boundary, dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::make_family;

    fn fam(kind: FamilyKind) -> FamilyModel {
        make_family(kind, 1).unwrap()
    }

    fn dual(v: f64) -> DualParam<f64> {
        DualParam::new(vec![v], GeneratorTag::Cumulant).unwrap()
    }

    #[test]
    fn exponential_and_poisson_conjugates() {
        let f = GeneratorFn::<f64>::cumulant(&fam(FamilyKind::Exponential));
        let v = conjugate(&f, &dual(-0.5)).unwrap();
        assert!((v - (-1.0 - 0.5f64.ln())).abs() < 1e-10);
        let sol = solve_gradient_equation(&f, &[-0.5], None, &SolverOptions::default()).unwrap();
        assert!((sol.theta[0] - 2.0).abs() < 1e-9 && sol.residual <= 1e-10);
        let p = GeneratorFn::<f64>::cumulant(&fam(FamilyKind::Poisson));
        assert!((conjugate(&p, &dual(1.0)).unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn outside_dual_domain_fails_loudly() {
        let f = GeneratorFn::<f64>::cumulant(&fam(FamilyKind::Exponential));
        match conjugate(&f, &dual(0.5)) {
            Err(Error::NoConvergence { last, .. }) => assert_eq!(last.len(), 1),
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }

    #[test]
    fn double_conjugates() {
        let e = fam(FamilyKind::Exponential);
        let th = NaturalParam::scalar(2.0).unwrap();
        assert!(double_conjugate_check(&GeneratorFn::cumulant(&e), &th).unwrap() <= 1e-7);
        assert!(double_conjugate_check(&GeneratorFn::partition(&e), &th).unwrap() <= 1e-7);
        let p = fam(FamilyKind::Poisson);
        let th = NaturalParam::scalar(0.5).unwrap();
        assert!(double_conjugate_check(&GeneratorFn::cumulant(&p), &th).unwrap() <= 1e-7);
    }

    #[test]
    fn four_routes_agree() {
        let pair = ConjugatePair::new(GeneratorFn::<f64>::cumulant(&fam(FamilyKind::Exponential)));
        let (a, b) = (NaturalParam::scalar(1.0).unwrap(), NaturalParam::scalar(2.0).unwrap());
        let cd = canonical_divergence(&pair, &a, &b).unwrap();
        assert!((cd.value() - (2f64.ln() - 0.5)).abs() < 1e-12);
        assert!(cd.spread() < 1e-8, "{cd:?}");
        let same = canonical_divergence(&pair, &a, &a).unwrap();
        assert!(same.routes().iter().all(|v| v.abs() < 1e-8));
        let back = pair.to_primal(&pair.to_dual(&b).unwrap()).unwrap();
        assert!((back.coords()[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn negentropy() {
        let s = IntegrationScheme::default();
        let cases = [
            (FamilyKind::Exponential, 1.0),
            (FamilyKind::Poisson, 0.0),
            (FamilyKind::CenteredNormal1D, 1.0),
        ];
        for (kind, t) in cases {
            let r = negentropy_check(&fam(kind), &NaturalParam::scalar(t).unwrap(), &s).unwrap();
            assert!(r <= 1e-6, "{kind}: {r}");
        }
    }

    #[test]
    fn affine_invariance() {
        let f = GeneratorFn::<f64>::cumulant(&fam(FamilyKind::Exponential));
        let (a, b) = (NaturalParam::scalar(1.0).unwrap(), NaturalParam::scalar(2.0).unwrap());
        let cases: [(f64, f64, f64, f64); 3] =
            [(1.0, 0.0, 0.0, 0.0), (2.0, 0.1, 0.0, 3.0), (1.0, 0.0, 5.0, 0.0)];
        for (am, bv, cv, d) in cases {
            let r = affine_reparam_check(&f, &[am], &[bv], &[cv], d, &a, &b).unwrap();
            assert!(r <= 1e-9, "{am} {bv} {cv} {d}: {r}");
        }
        assert!(affine_reparam_check(&f, &[0.0], &[0.0], &[0.0], 0.0, &a, &b).is_err());
    }

    #[test]
    fn boundary_behaviour() {
        for kind in [FamilyKind::Exponential, FamilyKind::CenteredNormal1D, FamilyKind::Normal1D] {
            let m = fam(kind);
            let (b, u) = family_boundary_direction::<f64>(&m).unwrap();
            for g in [GeneratorFn::cumulant(&m), GeneratorFn::partition(&m)] {
                let diag = boundary_diagnostic(&g, &b, &u).unwrap();
                assert!(diag.diverging, "{}: {diag:?}", g.name());
            }
        }
        assert!(family_boundary_direction::<f64>(&fam(FamilyKind::Poisson)).is_none());
    }
}
