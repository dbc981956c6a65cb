//! Exponential families in natural coordinates, their cumulant and partition
//! generators, and the divergences they induce on normalized and unnormalized
//! densities.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod deformation;
pub mod divergences;
pub mod error;
pub mod family;
pub mod generator;
pub mod legendre;
pub mod linalg;
pub mod oracle;
pub mod param;
pub mod quadrature;
pub mod scalar;

pub use deformation::{DeformationSpec, MeanGenerator, Verdict};
pub use divergences::{
    bregman, bz_decomposition, duo_bregman, fenchel_young, jensen_scaled, jensen_scaled_with,
    jensen_skewed, kappa, mixed_alpha_div, mixed_bhattacharyya, scalar_kl, BzDecomposition,
    JensenScaling, Skew,
};
pub use error::{Error, Result};
pub use family::{make_family, CountingMeasure, FamilyDescriptor, FamilyKind, FamilyModel, Support};
pub use generator::GeneratorFn;
pub use legendre::{ConjugatePair, CanonicalDivergence};
pub use oracle::{DensityFn, KlDecomposition};
pub use param::{DualParam, GeneratorTag, Layout, NaturalParam};
pub use quadrature::{integrate, Integral, IntegrationScheme, SchemeKind};
pub use scalar::{rel_diff, Real};

pub type Param = NaturalParam<f64>;
pub type Dual = DualParam<f64>;
pub type Generator = GeneratorFn<f64>;
