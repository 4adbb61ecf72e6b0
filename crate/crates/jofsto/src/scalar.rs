//! Scalar abstraction for the numeric core.
//!
//! Training runs on `f32` (see the `Real` alias at the crate root) while the
//! gradient-verification suites instantiate the same code with `f64`, where
//! central finite differences are meaningful. Reductions that the contract
//! pins to 64-bit (losses, score means) always accumulate in `f64` regardless
//! of the parameter scalar.

use num_traits::Float;
use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

pub trait Scalar:
    Float + AddAssign + SubAssign + MulAssign + Debug + Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Raw bit pattern, widened to u64. Used for bit-exact comparisons and
    /// parameter fingerprints.
    fn to_bits_u64(self) -> u64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn to_bits_u64(self) -> u64 {
        self.to_bits() as u64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }
}
