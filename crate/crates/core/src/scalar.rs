//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    /// Reduce an angle into `[0, 2π)`.
    fn wrap_tau(self) -> Self {
        let tau = Self::TAU();
        let r = self % tau;
        let r = if r < Self::zero() { r + tau } else { r };
        // `r + tau` can round up to exactly tau for tiny negative inputs.
        if r >= tau {
            Self::zero()
        } else {
            r
        }
    }

    /// Reduce an angle into `[-π, π)`.
    fn wrap_pi(self) -> Self {
        let pi = Self::PI();
        (self + pi).wrap_tau() - pi
    }

    /// Reduce `self` into `[-period/2, period/2)`.
    fn wrap_symmetric(self, period: Self) -> Self {
        let half = period * Self::half();
        let shifted = (self + half) % period;
        let shifted = if shifted < Self::zero() {
            shifted + period
        } else {
            shifted
        };
        shifted - half
    }
}

impl Real for f32 {}
impl Real for f64 {}
