//! Capped-precision computer algebra for p-adic period rings.
//!
//! The crate models period rings as truncated bivariate Laurent series over
//! exact p-adic scalars and builds on that model: distinguished period
//! elements, semilinear module constructions with commutation checks,
//! weight families, a generic decompletion engine, and near-identity matrix
//! factorization/gluing over a univariate Laurent window.
//!
//! Everything here is `no_std` (with `alloc`); IO, JSON, and the CLI live in
//! the companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod descent;
pub mod error;
pub mod family;
pub mod gluing;
pub mod matrix;
pub mod modules;
pub mod padic;
pub mod periods;
pub mod ring;
pub mod sample;

pub use descent::{BivariateDatum, DescMat, DescentRing, FiniteActionDatum, PairDatum, TateSenDatum};
pub use error::{CoreError, Result};
pub use family::{SigmaPoly, WeightFamilyModule};
pub use gluing::{
    bundle_splice, factor_near_identity, factor_near_identity_traced, kernel_basis_bruteforce,
    kernel_matches_resolution, resolve_gluing_datum, FiniteGluingDatum, GluedModule, GluingDiagram,
};
pub use matrix::Mat;
pub use modules::{Character, EpsilonTwist, PhiTauModule, TriangulineModule};
pub use padic::PadicNumber;
pub use periods::{LambdaConvention, PeriodBundle};
pub use ring::{ModelElement, Truncation};
pub use sample::Sampler;
