//! A desk-scale numerical laboratory for the Yang-Mills heat equation and
//! its linearization on a periodic 3-D lattice.
//!
//! The crate integrates the gauge-covariant heat flow of a connection form
//! `A`, solves the augmented variational equation along the flow, recovers
//! variational solutions through the vertical-correction procedure, and
//! packages the identities and inequalities governing these flows as
//! executable diagnostics.
//!
//! All field arithmetic is generic over the scalar type through [`Scalar`];
//! the concrete aliases at the crate root fix `f64`, which is what the CLI
//! and the verification suites use.

pub mod calculus;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod heat;
pub mod lie;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod sobolev;
pub mod spectral;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for executables and acceptance suites.
pub type Real = f64;

/// 𝔨-valued lattice form over `f64`.
pub type FormField64 = field::FormField<f64>;
/// Lie algebra element over `f64`.
pub type LieValue64 = lie::LieValue<f64>;
/// Structure-group descriptor over `f64`.
pub type GroupSpec64 = lie::GroupSpec<f64>;
/// Periodic grid over `f64`.
pub type Grid64 = grid::Grid<f64>;
