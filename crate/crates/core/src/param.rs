//! Points in natural and dual coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{all_finite, to_f64_vec, Real};

/// Storage layout of a parameter vector.
///
/// `SymMatrix` stores the upper triangle row by row and pairs two matrices
/// with the trace inner product `tr(A^T B)`, so off-diagonal entries count
/// twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum Layout {
    Vector,
    SymMatrix { dim: usize },
}

impl Layout {
    /// Inner-product weight of packed coordinate `k`.
    pub fn weight<T: Real>(&self, k: usize) -> T {
        match *self {
            Layout::Vector => T::one(),
            Layout::SymMatrix { dim } => {
                if is_diagonal_slot(dim, k) {
                    T::one()
                } else {
                    T::one() + T::one()
                }
            }
        }
    }

    pub fn inner<T: Real>(&self, a: &[T], b: &[T]) -> T {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(k, (&x, &y))| self.weight::<T>(k) * x * y)
            .sum()
    }

    /// Convert coordinate partial derivatives into the gradient representative
    /// with respect to [`Layout::inner`].
    pub fn gradient_from_partials<T: Real>(&self, partials: Vec<T>) -> Vec<T> {
        match self {
            Layout::Vector => partials,
            Layout::SymMatrix { .. } => partials
                .into_iter()
                .enumerate()
                .map(|(k, g)| g / self.weight::<T>(k))
                .collect(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Layout::Vector => "vector".into(),
            Layout::SymMatrix { dim } => format!("sym-matrix({dim})"),
        }
    }
}

fn is_diagonal_slot(dim: usize, k: usize) -> bool {
    (0..dim).any(|i| linalg::packed_index(dim, i, i) == k)
}

/// A point of the natural parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NaturalParam<T> {
    coords: Vec<T>,
    layout: Layout,
}

impl<T: Real> NaturalParam<T> {
    /// Validating constructor: coordinates must be finite and, for the
    /// matrix layout, describe a symmetric positive-definite matrix.
    pub fn new(coords: Vec<T>, layout: Layout) -> Result<Self> {
        if !all_finite(&coords) {
            return Err(Error::NonFinite(to_f64_vec(&coords)));
        }
        if let Layout::SymMatrix { dim } = layout {
            if coords.len() != linalg::packed_len(dim) {
                return Err(Error::DimensionMismatch {
                    expected: linalg::packed_len(dim),
                    found: coords.len(),
                });
            }
            let m = linalg::unpack_sym(&coords, dim);
            if linalg::cholesky(&m, dim).is_none() {
                return Err(Error::Domain {
                    owner: "symmetric positive-definite matrices".into(),
                    coords: to_f64_vec(&coords),
                });
            }
        }
        Ok(Self { coords, layout })
    }

    pub fn vector(coords: Vec<T>) -> Result<Self> {
        Self::new(coords, Layout::Vector)
    }

    pub fn scalar(x: T) -> Result<Self> {
        Self::vector(vec![x])
    }

    pub fn sym_matrix(packed: Vec<T>, dim: usize) -> Result<Self> {
        Self::new(packed, Layout::SymMatrix { dim })
    }

    /// Build from a full row-major symmetric matrix.
    pub fn from_full_matrix(m: &[T], dim: usize) -> Result<Self> {
        if m.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: m.len(),
            });
        }
        Self::sym_matrix(linalg::pack_sym(m, dim), dim)
    }

    /// Unvalidated point; used for interior combinations whose domain
    /// membership is checked by the consuming generator.
    pub(crate) fn raw(coords: Vec<T>, layout: Layout) -> Self {
        Self { coords, layout }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn inner(&self, other: &[T]) -> T {
        self.layout.inner(&self.coords, other)
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &Self, alpha: T) -> Self {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| b + alpha * (a - b))
            .collect();
        Self::raw(coords, self.layout)
    }

    pub fn sub(&self, other: &Self) -> Vec<T> {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| a - b)
            .collect()
    }

    /// Full matrix form (row-major) for the matrix layout.
    pub fn to_matrix(&self) -> Option<Vec<T>> {
        match self.layout {
            Layout::SymMatrix { dim } => Some(linalg::unpack_sym(&self.coords, dim)),
            Layout::Vector => None,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        to_f64_vec(&self.coords)
    }
}

/// Which generator produced a dual coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorTag {
    /// `eta = grad F(theta)`
    Cumulant,
    /// `eta = grad Z(theta)`
    Partition,
    /// Gradient of any other generator.
    Other,
}

/// A point in dual (gradient) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DualParam<T> {
    coords: Vec<T>,
    tag: GeneratorTag,
}

impl<T: Real> DualParam<T> {
    pub fn new(coords: Vec<T>, tag: GeneratorTag) -> Result<Self> {
        if !all_finite(&coords) {
            return Err(Error::NonFinite(to_f64_vec(&coords)));
        }
        Ok(Self { coords, tag })
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn tag(&self) -> GeneratorTag {
        self.tag
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_inner_product_counts_off_diagonal_twice() {
        let layout = Layout::SymMatrix { dim: 2 };
        // A = [[1,2],[2,3]], B = [[4,5],[5,6]] -> tr(AB) = 4 + 10 + 10 + 18
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        assert_eq!(layout.inner(&a, &b), 42.0);
    }

    #[test]
    fn rejects_non_finite_and_indefinite() {
        assert!(NaturalParam::vector(vec![1.0, f64::NAN]).is_err());
        assert!(NaturalParam::sym_matrix(vec![1.0, 2.0, 1.0], 2).is_err());
        assert!(NaturalParam::sym_matrix(vec![2.0, 0.5, 1.0], 2).is_ok());
        assert!(DualParam::new(vec![f64::INFINITY], GeneratorTag::Cumulant).is_err());
    }

    #[test]
    fn mix_is_affine() {
        let a = NaturalParam::vector(vec![1.0, 2.0]).unwrap();
        let b = NaturalParam::vector(vec![3.0, -2.0]).unwrap();
        let m = a.mix(&b, 0.25);
        assert_eq!(m.coords(), &[2.5, -1.0]);
    }
}
