//! Scalar abstraction shared by every numerical module.
//!
//! All of the math in this crate is written against [`Real`], so the same
//! code runs in `f32` for quick scans and in `f64` for the acceptance runs.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `|x|^e`, using repeated multiplication when `e` is a small integer.
    #[inline]
    fn abs_pow(self, e: Self) -> Self {
        let a = self.abs();
        if e == Self::one() {
            a
        } else if e == Self::lit(2.0) {
            a * a
        } else if e == Self::lit(3.0) {
            a * a * a
        } else {
            a.powf(e)
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
