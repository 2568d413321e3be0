//! Scalar abstraction for the lattice kernels.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable in every kernel of this crate.
///
/// Implemented for `f32` and `f64`. The verification suites run in `f64`;
/// the `f32` instantiation exists for cheap smoke runs and memory-bound
/// experiments.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn real(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts")
    }

    /// Conversion to `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn from_usize_(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize converts")
    }

    fn half() -> Self {
        Self::real(0.5)
    }

    fn two() -> Self {
        Self::real(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
