//! Scalar abstraction shared by every numeric module.
//!
//! All simulation and learning code is written against [`Scalar`] so that the
//! same routines run in `f64` (training, acceptance checks) and `f32`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or config value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function `1 / (1 + e^{-x})`.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Power ratio to decibels.
#[inline]
pub fn to_db<T: Scalar>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

/// Decibels to power ratio.
#[inline]
pub fn from_db<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        assert!((to_db(from_db(-12.8_f64)) + 12.8).abs() < 1e-12);
        assert_eq!(to_db(1.0_f32), 0.0);
    }

    #[test]
    fn sigmoid_midpoint_and_saturation() {
        assert_eq!(sigmoid(0.0_f64), 0.5);
        assert_eq!(sigmoid(50.0_f64), 1.0);
        assert_eq!(sigmoid(-800.0_f64), 0.0);
    }
}
