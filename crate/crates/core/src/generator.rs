//! Convex generator functions with value and gradient evaluation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::FamilyModel;
use crate::param::{DualParam, GeneratorTag, Layout, NaturalParam};
use crate::scalar::{c, to_f64_vec, Real};

type ValueFn<T> = Arc<dyn Fn(&[T]) -> Result<T> + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;
type DomainFn<T> = Arc<dyn Fn(&[T]) -> bool + Send + Sync>;

/// How a generator computes its gradient.
#[derive(Clone)]
pub enum Gradient<T> {
    Closed(GradFn<T>),
    /// Central differences with step `max(1e-5, 1e-7 |theta_k|)`.
    FiniteDifference,
}

/// A scalar function on an open parameter domain, treated as a Bregman
/// generator. Instances are cheap to clone and immutable.
#[derive(Clone)]
pub struct GeneratorFn<T> {
    name: String,
    value: ValueFn<T>,
    gradient: Gradient<T>,
    domain: DomainFn<T>,
    layout: Layout,
    tag: GeneratorTag,
    seeds: Vec<Vec<T>>,
}

impl<T> fmt::Debug for GeneratorFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorFn")
            .field("name", &self.name)
            .field("layout", &self.layout)
            .field("tag", &self.tag)
            .finish_non_exhaustive()
    }
}

impl<T: Real> GeneratorFn<T> {
    /// Generator from closures; the gradient defaults to finite differences.
    pub fn new<V, D>(name: impl Into<String>, layout: Layout, value: V, domain: D) -> Self
    where
        V: Fn(&[T]) -> Result<T> + Send + Sync + 'static,
        D: Fn(&[T]) -> bool + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: Gradient::FiniteDifference,
            domain: Arc::new(domain),
            layout,
            tag: GeneratorTag::Other,
            seeds: Vec::new(),
        }
    }

    /// Scalar generator from a plain closure on an open set.
    pub fn scalar<V, D>(name: impl Into<String>, value: V, domain: D) -> Self
    where
        V: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> bool + Send + Sync + 'static,
    {
        Self::new(
            name,
            Layout::Vector,
            move |x: &[T]| Ok(value(x[0])),
            move |x: &[T]| x.len() == 1 && x[0].is_finite() && domain(x[0]),
        )
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    {
        self.gradient = Gradient::Closed(Arc::new(grad));
        self
    }

    pub fn with_finite_difference(mut self) -> Self {
        self.gradient = Gradient::FiniteDifference;
        self
    }

    pub fn with_tag(mut self, tag: GeneratorTag) -> Self {
        self.tag = tag;
        self
    }

    /// Interior points used as solver seeds and sampling grids.
    pub fn with_seeds(mut self, seeds: Vec<Vec<T>>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Cumulant function `F` of a family.
    pub fn cumulant(model: &FamilyModel) -> Self {
        let m = *model;
        let (m1, m2) = (m, m);
        Self::new(
            format!("F[{}]", m.name()),
            m.layout(),
            move |th: &[T]| Ok(m.cumulant_raw(th)),
            move |th: &[T]| m1.in_domain(th),
        )
        .with_gradient(move |th: &[T]| Ok(m2.grad_cumulant_raw(th)))
        .with_tag(GeneratorTag::Cumulant)
        .with_seeds(grid_coords(model))
    }

    /// Partition function `Z` of a family.
    pub fn partition(model: &FamilyModel) -> Self {
        let m = *model;
        let (m1, m2) = (m, m);
        Self::new(
            format!("Z[{}]", m.name()),
            m.layout(),
            move |th: &[T]| Ok(m.partition_raw(th)),
            move |th: &[T]| m1.in_domain(th),
        )
        .with_gradient(move |th: &[T]| Ok(m2.grad_partition_raw(th)))
        .with_tag(GeneratorTag::Partition)
        .with_seeds(grid_coords(model))
    }

    /// `Z - 1`, the upper generator of the duo pseudo-divergence between a
    /// normalized and an unnormalized density.
    pub fn partition_minus_one(model: &FamilyModel) -> Self {
        let m = *model;
        let (m1, m2) = (m, m);
        Self::new(
            format!("Z-1[{}]", m.name()),
            m.layout(),
            move |th: &[T]| Ok(m.partition_raw(th) - T::one()),
            move |th: &[T]| m1.in_domain(th),
        )
        .with_gradient(move |th: &[T]| Ok(m2.grad_partition_raw(th)))
        .with_seeds(grid_coords(model))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn tag(&self) -> GeneratorTag {
        self.tag
    }

    pub fn seeds(&self) -> &[Vec<T>] {
        &self.seeds
    }

    pub fn has_closed_gradient(&self) -> bool {
        matches!(self.gradient, Gradient::Closed(_))
    }

    pub fn contains(&self, coords: &[T]) -> bool {
        (self.domain)(coords)
    }

    fn domain_error(&self, coords: &[T]) -> Error {
        Error::Domain {
            owner: self.name.clone(),
            coords: to_f64_vec(coords),
        }
    }

    fn check_layout(&self, theta: &NaturalParam<T>) -> Result<()> {
        if theta.layout() != self.layout {
            return Err(Error::LayoutMismatch {
                expected: self.layout.name(),
                found: theta.layout().name(),
            });
        }
        Ok(())
    }

    /// Value at raw coordinates, with domain and finiteness checks.
    pub fn value_at(&self, coords: &[T]) -> Result<T> {
        if !self.contains(coords) {
            return Err(self.domain_error(coords));
        }
        let v = (self.value)(coords)?;
        if !v.is_finite() {
            return Err(self.domain_error(coords));
        }
        Ok(v)
    }

    pub fn value(&self, theta: &NaturalParam<T>) -> Result<T> {
        self.check_layout(theta)?;
        self.value_at(theta.coords())
    }

    /// Gradient representative (with respect to the layout inner product).
    pub fn gradient_at(&self, coords: &[T]) -> Result<Vec<T>> {
        if !self.contains(coords) {
            return Err(self.domain_error(coords));
        }
        let g = match &self.gradient {
            Gradient::Closed(f) => f(coords)?,
            Gradient::FiniteDifference => self.finite_difference_gradient(coords)?,
        };
        if !g.iter().all(|v| v.is_finite()) {
            return Err(self.domain_error(coords));
        }
        Ok(g)
    }

    pub fn gradient(&self, theta: &NaturalParam<T>) -> Result<DualParam<T>> {
        self.check_layout(theta)?;
        DualParam::new(self.gradient_at(theta.coords())?, self.tag)
    }

    /// Central-difference gradient, shrinking the step near the boundary.
    pub fn finite_difference_gradient(&self, coords: &[T]) -> Result<Vec<T>> {
        let mut partials = Vec::with_capacity(coords.len());
        let mut x = coords.to_vec();
        for k in 0..coords.len() {
            let mut h = fd_step(coords[k]);
            let mut done = None;
            for _ in 0..40 {
                x[k] = coords[k] + h;
                let fp = if self.contains(&x) { (self.value)(&x).ok() } else { None };
                x[k] = coords[k] - h;
                let fm = if self.contains(&x) { (self.value)(&x).ok() } else { None };
                x[k] = coords[k];
                if let (Some(fp), Some(fm)) = (fp, fm) {
                    if fp.is_finite() && fm.is_finite() {
                        done = Some((fp - fm) / (h + h));
                        break;
                    }
                }
                h = h / c(4.0);
            }
            partials.push(done.ok_or_else(|| self.domain_error(coords))?);
        }
        Ok(self.layout.gradient_from_partials(partials))
    }
}

/// Finite-difference step `max(1e-5, 1e-7 |x|)`.
pub fn fd_step<T: Real>(x: T) -> T {
    c::<T>(1e-5).max(c::<T>(1e-7) * x.abs())
}

fn grid_coords<T: Real>(model: &FamilyModel) -> Vec<Vec<T>> {
    model
        .sample_grid::<T>()
        .into_iter()
        .map(|p| p.coords().to_vec())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_family, FamilyKind};

    #[test]
    fn finite_difference_matches_closed_form() {
        for kind in FamilyKind::ALL {
            let dim = if kind == FamilyKind::CenteredNormalND { 2 } else { 1 };
            let m = make_family(kind, dim).unwrap();
            for gen in [GeneratorFn::<f64>::cumulant(&m), GeneratorFn::partition(&m)] {
                for th in m.sample_grid::<f64>() {
                    let a = gen.gradient_at(th.coords()).unwrap();
                    let b = gen.finite_difference_gradient(th.coords()).unwrap();
                    for (x, y) in a.iter().zip(&b) {
                        let tol = 1e-6 * x.abs().max(1.0);
                        assert!((x - y).abs() < tol, "{} {:?}: {x} vs {y}", gen.name(), th.coords());
                    }
                }
            }
        }
    }

    #[test]
    fn domain_is_enforced() {
        let m = make_family(FamilyKind::Exponential, 1).unwrap();
        let g = GeneratorFn::<f64>::partition(&m);
        assert!(g.value_at(&[-0.5]).is_err());
        assert!(g.gradient_at(&[0.0]).is_err());
        // FD near the boundary shrinks its step instead of stepping outside.
        let fd = GeneratorFn::scalar("inv", |t: f64| 1.0 / t, |t| t > 0.0);
        let g = fd.gradient_at(&[2e-6]).unwrap();
        assert!((g[0] + 1.0 / 4e-12).abs() / (1.0 / 4e-12) < 0.25);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let m = make_family(FamilyKind::CenteredNormalND, 2).unwrap();
        let g = GeneratorFn::<f64>::cumulant(&m);
        let th = NaturalParam::vector(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(g.value(&th), Err(Error::LayoutMismatch { .. })));
    }
}
