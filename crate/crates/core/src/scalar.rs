//! Scalar abstraction for energy values, weights and indicator arithmetic.
//!
//! Times, sizes and capacities are integral and stay concrete. Everything that
//! is genuinely real-valued (power constants, TEC, Chebyshev weights, Q-values,
//! quality indicators) is generic over [`Scalar`], which is implemented for
//! `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Bundle of bounds needed by the solver for a floating point type.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only if the type cannot represent
    /// finite `f64` values at all, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_time(t: u64) -> Self {
        Self::from_u64(t).expect("time representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}
