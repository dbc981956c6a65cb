//! Built-in exponential families in natural coordinates.
//!
//! Every family uses `k(x) = 0`: any carrier term is folded into the
//! reference measure. In particular the Poisson family is taken with respect
//! to the measure `mu({k}) = 1/k!` on the naturals, which gives the cumulant
//! `F(theta) = e^theta`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::param::{DualParam, GeneratorTag, Layout, NaturalParam};
use crate::scalar::{c, sigmoid, softplus, to_f64_vec, Real};

/// Margin kept from the boundary of open parameter domains.
pub const DOMAIN_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Exponential,
    Poisson,
    Bernoulli,
    #[serde(rename = "centered-normal-1d")]
    CenteredNormal1D,
    #[serde(rename = "normal-1d")]
    Normal1D,
    #[serde(rename = "centered-normal-nd")]
    CenteredNormalND,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::Exponential,
        FamilyKind::Poisson,
        FamilyKind::Bernoulli,
        FamilyKind::CenteredNormal1D,
        FamilyKind::Normal1D,
        FamilyKind::CenteredNormalND,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Exponential => "exponential",
            FamilyKind::Poisson => "poisson",
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::CenteredNormal1D => "centered-normal-1d",
            FamilyKind::Normal1D => "normal-1d",
            FamilyKind::CenteredNormalND => "centered-normal-nd",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "exponential" | "exp" => FamilyKind::Exponential,
            "poisson" => FamilyKind::Poisson,
            "bernoulli" => FamilyKind::Bernoulli,
            "centered-normal-1d" | "centered-normal" | "centerednormal1d" => {
                FamilyKind::CenteredNormal1D
            }
            "normal-1d" | "normal" | "normal1d" | "gaussian" => FamilyKind::Normal1D,
            "centered-normal-nd" | "centerednormalnd" | "mvn" => FamilyKind::CenteredNormalND,
            _ => return Err(Error::UnknownFamily(s.to_string())),
        })
    }
}

/// Reference measure on a countable sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingMeasure {
    /// `mu({k}) = 1`
    Unit,
    /// `mu({k}) = 1/k!`
    InverseFactorial,
}

/// Sample space together with its reference measure.
///
/// `scale` is a length-scale hint for quadrature and sampling; it does not
/// change the measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support<T> {
    /// `[0, inf)` with Lebesgue measure.
    HalfLine { scale: T },
    /// The real line with Lebesgue measure.
    RealLine { scale: T },
    /// `R^dim` with Lebesgue measure.
    RealSpace { dim: usize, scale: T },
    /// The naturals `{0, 1, 2, ...}`.
    Naturals { measure: CountingMeasure },
    /// `{0, 1}` with counting measure.
    Binary,
}

impl<T: Real> Support<T> {
    pub fn obs_dim(&self) -> usize {
        match self {
            Support::RealSpace { dim, .. } => *dim,
            _ => 1,
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        if x.len() != self.obs_dim() || !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match self {
            Support::HalfLine { .. } => x[0] >= T::zero(),
            Support::RealLine { .. } | Support::RealSpace { .. } => true,
            Support::Naturals { .. } => x[0] >= T::zero() && x[0].fract() == T::zero(),
            Support::Binary => x[0] == T::zero() || x[0] == T::one(),
        }
    }

    pub fn with_scale(self, s: T) -> Self {
        match self {
            Support::HalfLine { .. } => Support::HalfLine { scale: s },
            Support::RealLine { .. } => Support::RealLine { scale: s },
            Support::RealSpace { dim, .. } => Support::RealSpace { dim, scale: s },
            other => other,
        }
    }

    pub fn scale(&self) -> T {
        match self {
            Support::HalfLine { scale }
            | Support::RealLine { scale }
            | Support::RealSpace { scale, .. } => *scale,
            _ => T::one(),
        }
    }
}

/// An exponential family in natural coordinates.
///
/// `dim` is the dimension of an observation; the order of the family (the
/// length of the natural parameter) is [`FamilyModel::order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyModel {
    kind: FamilyKind,
    dim: usize,
}

/// Construct a built-in family.
pub fn make_family(kind: FamilyKind, dim: usize) -> Result<FamilyModel> {
    let ok = match kind {
        FamilyKind::CenteredNormalND => dim >= 1,
        _ => dim == 1,
    };
    if !ok {
        return Err(Error::InvalidDimension {
            family: kind.name().into(),
            dim,
        });
    }
    Ok(FamilyModel { kind, dim })
}

impl FamilyModel {
    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        match self.kind {
            FamilyKind::CenteredNormalND => format!("{}(d={})", self.kind, self.dim),
            _ => self.kind.name().to_string(),
        }
    }

    /// Length of the natural parameter.
    pub fn order(&self) -> usize {
        match self.kind {
            FamilyKind::Normal1D => 2,
            FamilyKind::CenteredNormalND => linalg::packed_len(self.dim),
            _ => 1,
        }
    }

    pub fn layout(&self) -> Layout {
        match self.kind {
            FamilyKind::CenteredNormalND => Layout::SymMatrix { dim: self.dim },
            _ => Layout::Vector,
        }
    }

    /// Sample space and reference measure (unit scale hint).
    pub fn support<T: Real>(&self) -> Support<T> {
        match self.kind {
            FamilyKind::Exponential => Support::HalfLine { scale: T::one() },
            FamilyKind::Poisson => Support::Naturals {
                measure: CountingMeasure::InverseFactorial,
            },
            FamilyKind::Bernoulli => Support::Binary,
            FamilyKind::CenteredNormal1D | FamilyKind::Normal1D => {
                Support::RealLine { scale: T::one() }
            }
            FamilyKind::CenteredNormalND => Support::RealSpace {
                dim: self.dim,
                scale: T::one(),
            },
        }
    }

    /// Support with a scale hint matched to the density at `theta`.
    pub fn support_at<T: Real>(&self, theta: &NaturalParam<T>) -> Support<T> {
        let th = theta.coords();
        let s = match self.kind {
            FamilyKind::Exponential => T::one() / th[0],
            FamilyKind::CenteredNormal1D | FamilyKind::Normal1D => T::one() / th[0].sqrt(),
            FamilyKind::CenteredNormalND => {
                let m = linalg::unpack_sym(th, self.dim);
                let ev = linalg::sym_eigenvalues(&m, self.dim);
                T::one() / ev[0].sqrt()
            }
            _ => T::one(),
        };
        self.support::<T>().with_scale(s)
    }

    /// Open-domain membership of raw coordinates (with boundary margin).
    pub fn in_domain<T: Real>(&self, coords: &[T]) -> bool {
        if coords.len() != self.order() || !coords.iter().all(|v| v.is_finite()) {
            return false;
        }
        let margin = c::<T>(DOMAIN_MARGIN);
        match self.kind {
            FamilyKind::Exponential | FamilyKind::CenteredNormal1D | FamilyKind::Normal1D => {
                coords[0] > margin
            }
            FamilyKind::Poisson | FamilyKind::Bernoulli => true,
            FamilyKind::CenteredNormalND => {
                let d = self.dim;
                let mut m = linalg::unpack_sym(coords, d);
                for i in 0..d {
                    m[i * d + i] = m[i * d + i] - margin;
                }
                linalg::cholesky(&m, d).is_some()
            }
        }
    }

    fn check<T: Real>(&self, theta: &NaturalParam<T>) -> Result<()> {
        if theta.layout() != self.layout() {
            return Err(Error::LayoutMismatch {
                expected: self.layout().name(),
                found: theta.layout().name(),
            });
        }
        if !self.in_domain(theta.coords()) {
            return Err(self.domain_error(theta.coords()));
        }
        Ok(())
    }

    pub(crate) fn domain_error<T: Real>(&self, coords: &[T]) -> Error {
        Error::Domain {
            owner: self.name(),
            coords: to_f64_vec(coords),
        }
    }

    /// Validate and wrap raw coordinates as a parameter of this family.
    pub fn param<T: Real>(&self, coords: Vec<T>) -> Result<NaturalParam<T>> {
        let p = NaturalParam::new(coords, self.layout())?;
        self.check(&p)?;
        Ok(p)
    }

    /// Cumulant (log-partition) function `F`.
    pub fn cumulant<T: Real>(&self, theta: &NaturalParam<T>) -> Result<T> {
        self.check(theta)?;
        Ok(self.cumulant_raw(theta.coords()))
    }

    pub(crate) fn cumulant_raw<T: Real>(&self, th: &[T]) -> T {
        let half = c::<T>(0.5);
        let ln_2pi = (T::PI() + T::PI()).ln();
        match self.kind {
            FamilyKind::Exponential => -th[0].ln(),
            FamilyKind::Poisson => th[0].exp(),
            FamilyKind::Bernoulli => softplus(th[0]),
            FamilyKind::CenteredNormal1D => half * ln_2pi - half * th[0].ln(),
            FamilyKind::Normal1D => {
                half * ln_2pi - half * th[0].ln() + th[1] * th[1] / (th[0] + th[0])
            }
            FamilyKind::CenteredNormalND => {
                let d = self.dim;
                let m = linalg::unpack_sym(th, d);
                let ld = linalg::log_det_spd(&m, d).unwrap_or(T::nan());
                half * c::<T>(d as f64) * ln_2pi - half * ld
            }
        }
    }

    /// Partition function `Z = exp(F)`.
    pub fn partition<T: Real>(&self, theta: &NaturalParam<T>) -> Result<T> {
        self.check(theta)?;
        Ok(self.partition_raw(theta.coords()))
    }

    pub(crate) fn partition_raw<T: Real>(&self, th: &[T]) -> T {
        match self.kind {
            FamilyKind::Exponential => T::one() / th[0],
            FamilyKind::Bernoulli => T::one() + th[0].exp(),
            FamilyKind::CenteredNormal1D => ((T::PI() + T::PI()) / th[0]).sqrt(),
            _ => self.cumulant_raw(th).exp(),
        }
    }

    /// `grad F(theta)`, the expectation parameter.
    pub fn grad_cumulant<T: Real>(&self, theta: &NaturalParam<T>) -> Result<DualParam<T>> {
        self.check(theta)?;
        DualParam::new(self.grad_cumulant_raw(theta.coords()), GeneratorTag::Cumulant)
    }

    pub(crate) fn grad_cumulant_raw<T: Real>(&self, th: &[T]) -> Vec<T> {
        let half = c::<T>(0.5);
        match self.kind {
            FamilyKind::Exponential => vec![-T::one() / th[0]],
            FamilyKind::Poisson => vec![th[0].exp()],
            FamilyKind::Bernoulli => vec![sigmoid(th[0])],
            FamilyKind::CenteredNormal1D => vec![-half / th[0]],
            FamilyKind::Normal1D => {
                let (a, b) = (th[0], th[1]);
                vec![-half / a - half * b * b / (a * a), b / a]
            }
            FamilyKind::CenteredNormalND => {
                let d = self.dim;
                let m = linalg::unpack_sym(th, d);
                let inv = linalg::inverse_spd(&m, d)
                    .unwrap_or_else(|| vec![T::nan(); d * d]);
                linalg::pack_sym(&inv, d)
                    .into_iter()
                    .map(|v| -half * v)
                    .collect()
            }
        }
    }

    /// `grad Z(theta) = Z(theta) grad F(theta)`.
    pub fn grad_partition<T: Real>(&self, theta: &NaturalParam<T>) -> Result<DualParam<T>> {
        self.check(theta)?;
        DualParam::new(self.grad_partition_raw(theta.coords()), GeneratorTag::Partition)
    }

    pub(crate) fn grad_partition_raw<T: Real>(&self, th: &[T]) -> Vec<T> {
        match self.kind {
            FamilyKind::Exponential => vec![-T::one() / (th[0] * th[0])],
            FamilyKind::Bernoulli => vec![th[0].exp()],
            FamilyKind::CenteredNormal1D => {
                vec![-(T::FRAC_PI_2()).sqrt() * th[0].powf(c(-1.5))]
            }
            FamilyKind::Normal1D => {
                // -sqrt(pi/2) (t1 + t2^2) exp(t2^2 / 2 t1) / t1^(5/2),
                //  sqrt(2 pi) t2 exp(t2^2 / 2 t1) / t1^(3/2)
                let (a, b) = (th[0], th[1]);
                let e = (b * b / (a + a)).exp();
                vec![
                    -(T::FRAC_PI_2()).sqrt() * (a + b * b) * e / a.powf(c(2.5)),
                    (T::PI() + T::PI()).sqrt() * b * e / a.powf(c(1.5)),
                ]
            }
            _ => {
                let z = self.partition_raw(th);
                self.grad_cumulant_raw(th).into_iter().map(|g| z * g).collect()
            }
        }
    }

    /// Sufficient statistic `t(x)` in the parameter layout.
    pub fn sufficient_statistic<T: Real>(&self, x: &[T]) -> Vec<T> {
        let half = c::<T>(0.5);
        match self.kind {
            FamilyKind::Exponential => vec![-x[0]],
            FamilyKind::Poisson | FamilyKind::Bernoulli => vec![x[0]],
            FamilyKind::CenteredNormal1D => vec![-half * x[0] * x[0]],
            FamilyKind::Normal1D => vec![-half * x[0] * x[0], x[0]],
            FamilyKind::CenteredNormalND => {
                let d = self.dim;
                let mut out = Vec::with_capacity(self.order());
                for i in 0..d {
                    for j in i..d {
                        out.push(-half * x[i] * x[j]);
                    }
                }
                out
            }
        }
    }

    /// `log p~_theta(x)`, `-inf` outside the support.
    pub fn ln_unnormalized_density<T: Real>(&self, theta: &NaturalParam<T>, x: &[T]) -> Result<T> {
        self.check(theta)?;
        Ok(self.ln_unnormalized_raw(theta.coords(), x))
    }

    pub(crate) fn ln_unnormalized_raw<T: Real>(&self, th: &[T], x: &[T]) -> T {
        if !self.support::<T>().contains(x) {
            return T::neg_infinity();
        }
        self.layout().inner(th, &self.sufficient_statistic(x))
    }

    /// Unnormalized density `p~_theta(x) = exp(<theta, t(x)>)`; zero outside
    /// the support.
    pub fn unnormalized_density<T: Real>(&self, theta: &NaturalParam<T>, x: &[T]) -> Result<T> {
        Ok(self.ln_unnormalized_density(theta, x)?.exp())
    }

    /// Normalized density `p_theta(x) = p~_theta(x) / Z(theta)`.
    pub fn density<T: Real>(&self, theta: &NaturalParam<T>, x: &[T]) -> Result<T> {
        self.check(theta)?;
        let th = theta.coords();
        Ok((self.ln_unnormalized_raw(th, x) - self.cumulant_raw(th)).exp())
    }

    /// Map a conventional parameterization to natural coordinates:
    /// rate `lambda` (exponential), mean `lambda` (Poisson), success
    /// probability (Bernoulli), variance (centered normal), `(mu, sigma^2)`
    /// (normal), packed covariance (multivariate centered normal).
    pub fn natural_from_source<T: Real>(&self, source: &[T]) -> Result<NaturalParam<T>> {
        let bad = || Error::InvalidArgument(format!(
            "source parameter {:?} invalid for {}",
            to_f64_vec(source),
            self.name()
        ));
        let coords = match self.kind {
            FamilyKind::Exponential => {
                if source.len() != 1 || !(source[0] > T::zero()) {
                    return Err(bad());
                }
                vec![source[0]]
            }
            FamilyKind::Poisson => {
                if source.len() != 1 || !(source[0] > T::zero()) {
                    return Err(bad());
                }
                vec![source[0].ln()]
            }
            FamilyKind::Bernoulli => {
                let q = *source.first().ok_or_else(bad)?;
                if source.len() != 1 || !(q > T::zero() && q < T::one()) {
                    return Err(bad());
                }
                vec![(q / (T::one() - q)).ln()]
            }
            FamilyKind::CenteredNormal1D => {
                if source.len() != 1 || !(source[0] > T::zero()) {
                    return Err(bad());
                }
                vec![T::one() / source[0]]
            }
            FamilyKind::Normal1D => {
                if source.len() != 2 || !(source[1] > T::zero()) {
                    return Err(bad());
                }
                vec![T::one() / source[1], source[0] / source[1]]
            }
            FamilyKind::CenteredNormalND => {
                let d = self.dim;
                if source.len() != linalg::packed_len(d) {
                    return Err(bad());
                }
                let cov = linalg::unpack_sym(source, d);
                let inv = linalg::inverse_spd(&cov, d).ok_or_else(bad)?;
                linalg::pack_sym(&inv, d)
            }
        };
        self.param(coords)
    }

    /// A fixed set of interior parameters used as test grids and solver seeds.
    pub fn sample_grid<T: Real>(&self) -> Vec<NaturalParam<T>> {
        let raw: Vec<Vec<f64>> = match self.kind {
            FamilyKind::Exponential | FamilyKind::CenteredNormal1D => {
                [0.25, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 5.0].iter().map(|&v| vec![v]).collect()
            }
            FamilyKind::Poisson => {
                [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5].iter().map(|&v| vec![v]).collect()
            }
            FamilyKind::Bernoulli => {
                [-3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0].iter().map(|&v| vec![v]).collect()
            }
            FamilyKind::Normal1D => {
                let mut g = Vec::new();
                for &a in &[0.5, 1.0, 2.0, 3.0] {
                    for &b in &[-1.0, 0.0, 0.5, 1.5] {
                        g.push(vec![a, b]);
                    }
                }
                g
            }
            FamilyKind::CenteredNormalND => {
                let d = self.dim;
                let mut g = Vec::new();
                for &(s, off) in &[(1.0, 0.0), (2.0, 0.3), (0.7, -0.1), (1.5, 0.5), (3.0, 0.0)] {
                    let mut m = vec![0.0; d * d];
                    for i in 0..d {
                        m[i * d + i] = s * (1.0 + 0.1 * i as f64);
                        if i + 1 < d {
                            m[i * d + i + 1] = off * s / 2.0;
                            m[(i + 1) * d + i] = off * s / 2.0;
                        }
                    }
                    g.push(linalg::pack_sym(&m, d));
                }
                g
            }
        };
        raw.into_iter()
            .map(|v| NaturalParam::raw(v.into_iter().map(c::<T>).collect(), self.layout()))
            .collect()
    }

    /// A boundary point of the parameter domain, when the domain is not all
    /// of `R^m`.
    pub fn boundary_point<T: Real>(&self) -> Option<Vec<T>> {
        match self.kind {
            FamilyKind::Exponential | FamilyKind::CenteredNormal1D => Some(vec![T::zero()]),
            FamilyKind::Normal1D => Some(vec![T::zero(), T::zero()]),
            FamilyKind::CenteredNormalND => Some(vec![T::zero(); self.order()]),
            FamilyKind::Poisson | FamilyKind::Bernoulli => None,
        }
    }
}

/// JSON form of a family, optionally with a parameter:
/// `{"kind": "normal-1d", "dim": 1, "theta": [1.0, 0.5]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    pub kind: FamilyKind,
    #[serde(default = "unit_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

fn unit_dim() -> usize {
    1
}

impl FamilyDescriptor {
    pub fn new(model: &FamilyModel, theta: Option<&NaturalParam<f64>>) -> Self {
        Self {
            kind: model.kind(),
            dim: model.dim(),
            theta: theta.map(|t| t.coords().to_vec()),
        }
    }

    pub fn model(&self) -> Result<FamilyModel> {
        make_family(self.kind, self.dim)
    }

    /// The carried parameter, validated against the family domain.
    pub fn param(&self) -> Result<Option<NaturalParam<f64>>> {
        let model = self.model()?;
        self.theta.clone().map(|t| model.param(t)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: &FamilyModel, v: &[f64]) -> NaturalParam<f64> {
        m.param(v.to_vec()).unwrap()
    }

    #[test]
    fn exponential_closed_forms() {
        let m = make_family(FamilyKind::Exponential, 1).unwrap();
        assert_eq!(m.partition(&p(&m, &[2.0])).unwrap(), 0.5);
        assert_eq!(m.cumulant(&p(&m, &[1.0])).unwrap(), 0.0);
        assert!((m.cumulant(&p(&m, &[2.0])).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert_eq!(m.grad_cumulant(&p(&m, &[2.0])).unwrap().coords(), &[-0.5]);
        assert_eq!(m.grad_partition(&p(&m, &[2.0])).unwrap().coords(), &[-0.25]);
        assert_eq!(m.unnormalized_density(&p(&m, &[1.0]), &[0.0]).unwrap(), 1.0);
        let v = m.unnormalized_density(&p(&m, &[2.0]), &[1.0]).unwrap();
        assert!((v - (-2f64).exp()).abs() < 1e-16);
        assert_eq!(m.density(&p(&m, &[2.0]), &[0.0]).unwrap(), 2.0);
        assert_eq!(m.unnormalized_density(&p(&m, &[2.0]), &[-1.0]).unwrap(), 0.0);
    }

    #[test]
    fn poisson_and_bernoulli() {
        let m = make_family(FamilyKind::Poisson, 1).unwrap();
        let th = p(&m, &[0.0]);
        assert_eq!(m.cumulant(&th).unwrap(), 1.0);
        assert!((m.partition(&th).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(m.grad_cumulant(&th).unwrap().coords(), &[1.0]);
        let b = make_family(FamilyKind::Bernoulli, 1).unwrap();
        assert!((b.density(&p(&b, &[0.0]), &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(b.density(&p(&b, &[0.0]), &[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn normal_families() {
        let m = make_family(FamilyKind::CenteredNormal1D, 1).unwrap();
        let z = m.partition(&p(&m, &[1.0])).unwrap();
        assert!((z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
        let g = m.grad_partition(&p(&m, &[1.0])).unwrap();
        assert!((g.coords()[0] + std::f64::consts::FRAC_PI_2.sqrt()).abs() < 1e-14);
        let v = m.unnormalized_density(&p(&m, &[1.0]), &[2.0]).unwrap();
        assert!((v - (-2f64).exp()).abs() < 1e-16);

        let n = make_family(FamilyKind::Normal1D, 1).unwrap();
        let g = n.grad_cumulant(&p(&n, &[1.0, 0.0])).unwrap();
        assert_eq!(g.coords(), &[-0.5, 0.0]);
    }

    #[test]
    fn multivariate_partition_matches_product_for_diagonal() {
        let m = make_family(FamilyKind::CenteredNormalND, 2).unwrap();
        let th = m.param(vec![2.0, 0.0, 0.5]).unwrap();
        let z1 = |t: f64| (2.0 * std::f64::consts::PI / t).sqrt();
        assert!((m.partition(&th).unwrap() - z1(2.0) * z1(0.5)).abs() < 1e-12);
        // grad F = -1/2 theta^{-1}
        let g = m.grad_cumulant(&th).unwrap();
        assert!((g.coords()[0] + 0.25).abs() < 1e-15);
        assert!(g.coords()[1].abs() < 1e-15);
        assert!((g.coords()[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(make_family(FamilyKind::Exponential, 2).is_err());
        assert!(make_family(FamilyKind::CenteredNormalND, 0).is_err());
        assert!("weibull".parse::<FamilyKind>().is_err());
        let m = make_family(FamilyKind::Exponential, 1).unwrap();
        assert!(matches!(m.param(vec![-1.0]), Err(Error::Domain { .. })));
        assert!(m.param(vec![1e-13]).is_err());
        let th = NaturalParam::scalar(-1.0).unwrap();
        assert!(matches!(m.cumulant(&th), Err(Error::Domain { .. })));
    }

    #[test]
    fn source_parameters() {
        let n = make_family(FamilyKind::Normal1D, 1).unwrap();
        let th = n.natural_from_source(&[1.0, 0.5]).unwrap();
        assert_eq!(th.coords(), &[2.0, 2.0]);
        let b = make_family(FamilyKind::Bernoulli, 1).unwrap();
        assert_eq!(b.natural_from_source(&[0.5]).unwrap().coords(), &[0.0]);
        assert!(b.natural_from_source(&[1.5]).is_err());
    }

    #[test]
    fn grid_points_are_in_domain() {
        for kind in FamilyKind::ALL {
            let dim = if kind == FamilyKind::CenteredNormalND { 3 } else { 1 };
            let m = make_family(kind, dim).unwrap();
            for th in m.sample_grid::<f64>() {
                assert!(m.in_domain(th.coords()), "{kind} {:?}", th.coords());
            }
        }
    }

    #[test]
    fn descriptor_json() {
        let d: FamilyDescriptor =
            serde_json::from_str(r#"{"kind":"normal-1d","theta":[1.0,0.5]}"#).unwrap();
        assert_eq!(d.dim, 1);
        assert_eq!(d.param().unwrap().unwrap().coords(), &[1.0, 0.5]);
        let bad: FamilyDescriptor =
            serde_json::from_str(r#"{"kind":"exponential","theta":[-1.0]}"#).unwrap();
        assert!(matches!(bad.param(), Err(Error::Domain { .. })));
        let nd: FamilyDescriptor =
            serde_json::from_str(r#"{"kind":"centered-normal-nd","dim":0}"#).unwrap();
        assert!(nd.model().is_err());
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<FamilyDescriptor>(&back).unwrap(), d);
    }
}
