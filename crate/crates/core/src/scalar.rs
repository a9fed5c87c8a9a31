//! Scalar abstraction shared by every numerical module.
//!
//! All linear algebra in this crate runs on [`nalgebra`] dense matrices, so the
//! bound is `nalgebra::RealField`. Conversions to and from `f64` go through
//! `num-traits`, which keeps literals and tolerances readable in generic code.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real number type the solvers and clustering routines are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances are specified as `f64` and
/// converted with [`Real::lit`]; single precision will not meet the default
/// LP tolerances on anything but toy problems.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn is_finite_real(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Maximum absolute value of a slice, zero when empty.
pub fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}
