//! Quasi-arithmetic means, generator deformations `g = tau^-1 o G o rho` and
//! sampling-based convexity certificates for deformed generators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::divergences::{bregman, jensen_scaled, Skew};
use crate::error::{Error, Result};
use crate::generator::GeneratorFn;
use crate::param::{Layout, NaturalParam};
use crate::scalar::{c, to_f64_vec, Real};

/// Below this `|p|` the power generator is replaced by its logarithmic limit.
pub const POWER_LOG_SWITCH: f64 = 1e-8;

/// A strictly increasing scalar map with its inverse.
///
/// `Power { p }` is `h_p(u) = (u^p - 1)/p` on `u > 0`, with inverse
/// `(1 + u p)^(1/p)`; `Log` is the `p -> 0` limit. `Inverse` swaps a map with
/// its inverse and `Compose { outer, inner }` is `outer o inner`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum MeanGenerator {
    Identity,
    Log,
    Power { p: f64 },
    Inverse { of: Box<MeanGenerator> },
    Compose { outer: Box<MeanGenerator>, inner: Box<MeanGenerator> },
}

impl fmt::Display for MeanGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanGenerator::Identity => write!(f, "identity"),
            MeanGenerator::Log => write!(f, "log"),
            MeanGenerator::Power { p } => write!(f, "power({p})"),
            MeanGenerator::Inverse { of } => write!(f, "inverse({of})"),
            MeanGenerator::Compose { outer, inner } => write!(f, "{outer} o {inner}"),
        }
    }
}

fn finite<T: Real>(v: T) -> Option<T> {
    v.is_finite().then_some(v)
}

impl MeanGenerator {
    pub fn power(p: f64) -> Self {
        MeanGenerator::Power { p }
    }

    pub fn inverse(&self) -> Self {
        match self {
            MeanGenerator::Identity => MeanGenerator::Identity,
            MeanGenerator::Inverse { of } => (**of).clone(),
            other => MeanGenerator::Inverse { of: Box::new(other.clone()) },
        }
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &MeanGenerator) -> Self {
        match (self, inner) {
            (MeanGenerator::Identity, g) | (g, MeanGenerator::Identity) => g.clone(),
            _ => MeanGenerator::Compose {
                outer: Box::new(self.clone()),
                inner: Box::new(inner.clone()),
            },
        }
    }

    /// `h(u)`, or `None` outside the interval of definition.
    pub fn h<T: Real>(&self, u: T) -> Option<T> {
        if !u.is_finite() {
            return None;
        }
        match self {
            MeanGenerator::Identity => Some(u),
            MeanGenerator::Log => (u > T::zero()).then(|| u.ln()),
            MeanGenerator::Power { p } => {
                if !(u > T::zero()) {
                    None
                } else if p.abs() < POWER_LOG_SWITCH {
                    Some(u.ln())
                } else {
                    let p = c::<T>(*p);
                    finite((u.powf(p) - T::one()) / p)
                }
            }
            MeanGenerator::Inverse { of } => of.h_inv(u),
            MeanGenerator::Compose { outer, inner } => outer.h(inner.h(u)?),
        }
    }

    /// `h^-1(v)`, or `None` outside the range of `h`.
    pub fn h_inv<T: Real>(&self, v: T) -> Option<T> {
        if !v.is_finite() {
            return None;
        }
        match self {
            MeanGenerator::Identity => Some(v),
            MeanGenerator::Log => finite(v.exp()),
            MeanGenerator::Power { p } => {
                if p.abs() < POWER_LOG_SWITCH {
                    return finite(v.exp());
                }
                let p = c::<T>(*p);
                let base = T::one() + v * p;
                (base > T::zero()).then(|| base.powf(T::one() / p)).and_then(finite)
            }
            MeanGenerator::Inverse { of } => of.h(v),
            MeanGenerator::Compose { outer, inner } => inner.h_inv(outer.h_inv(v)?),
        }
    }
}

/// Weighted quasi-arithmetic mean `h^-1(alpha h(x) + (1-alpha) h(y))`.
pub fn qa_mean<T: Real>(h: &MeanGenerator, x: T, y: T, alpha: T) -> Result<T> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::InvalidSkew(alpha.as_f64()));
    }
    let outside = || Error::Domain {
        owner: format!("mean generator {h}"),
        coords: vec![x.as_f64(), y.as_f64()],
    };
    let (hx, hy) = (h.h(x).ok_or_else(outside)?, h.h(y).ok_or_else(outside)?);
    if alpha == T::one() {
        return Ok(x);
    }
    if alpha == T::zero() {
        return Ok(y);
    }
    let m = h.h_inv(alpha * hx + (T::one() - alpha) * hy).ok_or_else(outside)?;
    // Clamp rounding excursions so the result is always between its arguments.
    Ok(m.max(x.min(y)).min(x.max(y)))
}

/// The pair `(rho, tau)` of the deformation `g = tau^-1 o G o rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationSpec {
    pub rho: MeanGenerator,
    pub tau: MeanGenerator,
}

impl DeformationSpec {
    pub fn new(rho: MeanGenerator, tau: MeanGenerator) -> Self {
        Self { rho, tau }
    }

    pub fn identity() -> Self {
        Self::new(MeanGenerator::Identity, MeanGenerator::Identity)
    }

    /// The deformation undoing `self`.
    pub fn inverse(&self) -> Self {
        Self::new(self.rho.inverse(), self.tau.inverse())
    }

    /// Single deformation equal to applying `self` and then `next`.
    pub fn then(&self, next: &DeformationSpec) -> Self {
        Self::new(self.rho.compose(&next.rho), self.tau.compose(&next.tau))
    }
}

/// `g(theta) = tau^-1(G(rho(theta)))`, with `rho` applied coordinatewise and a
/// finite-difference gradient.
pub fn deform<T: Real>(gen: &GeneratorFn<T>, spec: &DeformationSpec) -> GeneratorFn<T> {
    let map_in = {
        let rho = spec.rho.clone();
        move |theta: &[T]| -> Option<Vec<T>> { theta.iter().map(|t| rho.h(*t)).collect() }
    };
    let (m1, m2) = (map_in.clone(), map_in);
    let (g1, g2) = (gen.clone(), gen.clone());
    let (tau1, tau2) = (spec.tau.clone(), spec.tau.clone());
    let name = format!("deform({}; rho={}, tau={})", gen.name(), spec.rho, spec.tau);
    let err_name = name.clone();
    let rho_inv = spec.rho.inverse();
    let seeds: Vec<Vec<T>> = gen
        .seeds()
        .iter()
        .filter_map(|s| s.iter().map(|t| rho_inv.h(*t)).collect::<Option<Vec<T>>>())
        .collect();
    GeneratorFn::new(
        name,
        gen.layout(),
        move |theta: &[T]| {
            let outside = || Error::Domain { owner: err_name.clone(), coords: to_f64_vec(theta) };
            let inner = m1(theta).ok_or_else(outside)?;
            let v = g1.value_at(&inner)?;
            tau1.h_inv(v).ok_or_else(outside)
        },
        move |theta: &[T]| {
            m2(theta).is_some_and(|inner| {
                g2.contains(&inner) && g2.value_at(&inner).ok().and_then(|v| tau2.h_inv(v)).is_some()
            })
        },
    )
    .with_seeds(seeds)
}

/// `Z_p(theta) = (theta^-p - 1)/p`, the power deformation of the exponential
/// family's partition function `1/theta`, with its closed-form gradient.
pub fn power_deformed_partition<T: Real>(p: f64) -> GeneratorFn<T> {
    let log = p.abs() < POWER_LOG_SWITCH;
    let pt = c::<T>(p);
    let seeds = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|v| vec![c::<T>(*v)]).collect();
    GeneratorFn::scalar(
        format!("Z_{p}"),
        move |t: T| if log { -t.ln() } else { (t.powf(-pt) - T::one()) / pt },
        |t: T| t > T::zero(),
    )
    .with_gradient(move |x: &[T]| Ok(vec![-x[0].powf(-pt - T::one())]))
    .with_seeds(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Convex,
    NotConvex,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Convex => "convex",
            Verdict::NotConvex => "not-convex",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Slack below which sampled violations are ignored.
pub const CONVEX_SLACK: f64 = 1e-9;
/// Violations above this are reported as non-convexity.
pub const VIOLATION_THRESHOLD: f64 = 1e-6;

fn classify(worst: f64) -> Verdict {
    if worst <= CONVEX_SLACK {
        Verdict::Convex
    } else if worst > VIOLATION_THRESHOLD {
        Verdict::NotConvex
    } else {
        Verdict::Inconclusive
    }
}

/// Outcome of a sampled convexity test, with the evidence it rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    /// Largest value of `-(second difference)/step^2`.
    pub worst_curvature: f64,
    /// Largest midpoint excess `g(mid) - (g(a) + g(b))/2`, relative to
    /// `max(1, |g(a)|, |g(b)|)`.
    pub worst_jensen_gap: f64,
    pub worst_at: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    pub step: f64,
    pub slack: f64,
}

fn probe_directions<T: Real>(n: usize) -> Vec<Vec<T>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        dirs.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            for s in [T::one(), -T::one()] {
                let mut e = vec![T::zero(); n];
                e[i] = T::one();
                e[j] = s;
                dirs.push(e);
            }
        }
    }
    dirs
}

/// Sampled convexity test: second differences along coordinate and pairwise
/// diagonal directions at every grid point, plus midpoint Jensen gaps over
/// every pair of grid points.
///
/// Second differences are divided by `step^2`, so the curvature threshold
/// does not depend on the step.
pub fn convexity_certificate<T: Real>(
    gen: &GeneratorFn<T>,
    grid: &[Vec<T>],
    step: T,
) -> Result<Certificate> {
    if !(step > T::zero()) || grid.is_empty() {
        return Err(Error::InvalidArgument("certificate needs a positive step and a grid".into()));
    }
    let mut worst_curv = f64::NEG_INFINITY;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_at = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let note = |v: f64, at: &[T], worst: &mut f64, worst_at: &mut Vec<f64>| {
        if v > *worst {
            *worst = v;
            *worst_at = to_f64_vec(at);
        }
    };
    let two = c::<T>(2.0);
    for x in grid {
        let gx = gen.value_at(x)?;
        for dir in probe_directions::<T>(x.len()) {
            let plus: Vec<T> = x.iter().zip(&dir).map(|(a, d)| *a + step * *d).collect();
            let minus: Vec<T> = x.iter().zip(&dir).map(|(a, d)| *a - step * *d).collect();
            let sd = gen.value_at(&plus)? - two * gx + gen.value_at(&minus)?;
            let curv = (-sd / (step * step)).as_f64();
            worst_curv = worst_curv.max(curv);
            note(curv, x, &mut worst, &mut worst_at);
        }
    }
    let half = c::<T>(0.5);
    for (i, a) in grid.iter().enumerate() {
        for b in &grid[i + 1..] {
            let mid: Vec<T> = a.iter().zip(b).map(|(u, v)| half * (*u + *v)).collect();
            if !gen.contains(&mid) {
                continue;
            }
            let (ga, gb) = (gen.value_at(a)?, gen.value_at(b)?);
            let scale = T::one().max(ga.abs()).max(gb.abs());
            let gap = ((gen.value_at(&mid)? - half * (ga + gb)) / scale).as_f64();
            worst_gap = worst_gap.max(gap);
            note(gap, &mid, &mut worst, &mut worst_at);
        }
    }
    Ok(Certificate {
        verdict: classify(worst),
        worst_curvature: worst_curv,
        worst_jensen_gap: worst_gap,
        worst_at,
        grid: grid.iter().map(|p| to_f64_vec(p)).collect(),
        step: step.as_f64(),
        slack: CONVEX_SLACK,
    })
}

/// Default certificate step for a grid: a small fraction of the smallest
/// coordinate magnitude, so that `x +- step` stays inside domains bounded
/// at zero.
pub fn default_step<T: Real>(grid: &[Vec<T>]) -> T {
    let smallest = grid
        .iter()
        .flatten()
        .map(|v| v.abs())
        .filter(|v| *v > T::zero())
        .fold(T::one(), T::min);
    c::<T>(1e-3) * smallest
}

/// Result of the two-route `(M_rho, M_tau)`-convexity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnConvexity {
    pub verdict: Verdict,
    /// Route (a): `g(M_rho(x, y)) <= M_tau(g(x), g(y))` sampled on grid pairs.
    pub definitional: Verdict,
    pub worst_violation: f64,
    /// Route (b): ordinary convexity of `tau o g o rho^-1`.
    pub certificate: Certificate,
}

/// `(M_rho, M_tau)`-convexity of a scalar generator, decided both from the
/// definition and through ordinary convexity of `tau o g o rho^-1`.
/// Contradictory routes are an error.
pub fn mn_convexity_check<T: Real>(
    gen: &GeneratorFn<T>,
    rho: &MeanGenerator,
    tau: &MeanGenerator,
    grid: &[T],
    alphas: &[T],
) -> Result<MnConvexity> {
    let mut worst = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        for &y in &grid[i + 1..] {
            let (gx, gy) = (gen.value_at(&[x])?, gen.value_at(&[y])?);
            for &a in alphas {
                let m = qa_mean(rho, x, y, a)?;
                let lhs = gen.value_at(&[m])?;
                let rhs = qa_mean(tau, gx, gy, a)?;
                let scale = T::one().max(gx.abs()).max(gy.abs());
                worst = worst.max(((lhs - rhs) / scale).as_f64());
            }
        }
    }
    let definitional = classify(worst);

    let straightened = deform(gen, &DeformationSpec::new(rho.inverse(), tau.inverse()));
    let mapped: Vec<Vec<T>> = grid
        .iter()
        .map(|x| {
            rho.h(*x).map(|v| vec![v]).ok_or_else(|| Error::Domain {
                owner: format!("mean generator {rho}"),
                coords: vec![x.as_f64()],
            })
        })
        .collect::<Result<_>>()?;
    let certificate = convexity_certificate(&straightened, &mapped, default_step(&mapped))?;

    let verdict = match (definitional, certificate.verdict) {
        (a, b) if a == b => a,
        (Verdict::Convex, Verdict::NotConvex) | (Verdict::NotConvex, Verdict::Convex) => {
            return Err(Error::Inconsistent(format!(
                "(M_rho, M_tau)-convexity routes disagree for {}: definition says {definitional}, \
                 certificate says {}",
                gen.name(),
                certificate.verdict
            )))
        }
        _ => Verdict::Inconclusive,
    };
    Ok(MnConvexity { verdict, definitional, worst_violation: worst, certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformedDivergences {
    /// `B_g(theta1 : theta2)`
    pub bregman: f64,
    /// `J^s_{g, alpha}(theta1 : theta2)`
    pub jensen_scaled: f64,
    pub certificate: Certificate,
}

const SEGMENT_POINTS: usize = 9;

/// Bregman and scaled Jensen divergences of the deformed generator, refused
/// when the deformed generator fails the convexity certificate on the
/// segment between the two parameters.
pub fn deformed_divergences<T: Real>(
    gen: &GeneratorFn<T>,
    spec: &DeformationSpec,
    theta1: &NaturalParam<T>,
    theta2: &NaturalParam<T>,
    alpha: T,
) -> Result<DeformedDivergences> {
    let g = deform(gen, spec);
    let segment: Vec<Vec<T>> = (0..SEGMENT_POINTS)
        .map(|i| {
            let t = c::<T>(i as f64 / (SEGMENT_POINTS - 1) as f64);
            theta1.mix(theta2, t).coords().to_vec()
        })
        .collect();
    let length = theta1.sub(theta2).iter().map(|v| *v * *v).sum::<T>().sqrt();
    let step = if length > T::zero() {
        c::<T>(1e-3) * length.min(default_step(&segment) * c(1e3))
    } else {
        default_step(&segment)
    };
    let certificate = convexity_certificate(&g, &segment, step)?;
    if certificate.verdict == Verdict::NotConvex {
        return Err(Error::NotConvex(format!(
            "{} on [{:?}, {:?}]: worst violation {:e} at {:?}",
            g.name(),
            theta1.to_f64(),
            theta2.to_f64(),
            certificate.worst_curvature.max(certificate.worst_jensen_gap),
            certificate.worst_at
        )));
    }
    let layout = g.layout();
    let as_layout = |th: &NaturalParam<T>| -> Result<NaturalParam<T>> {
        match layout {
            Layout::Vector => NaturalParam::vector(th.coords().to_vec()),
            _ => Ok(th.clone()),
        }
    };
    let (a, b) = (as_layout(theta1)?, as_layout(theta2)?);
    Ok(DeformedDivergences {
        bregman: bregman(&g, &a, &b)?.as_f64(),
        jensen_scaled: jensen_scaled(&g, &a, &b, Skew::from_alpha(alpha))?.as_f64(),
        certificate,
    })
}
