use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the numerical kernels are written against: f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Literals are finite, so this never fails for
    /// the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    /// Smallest probability treated as nonzero by tail computations.
    #[inline]
    fn tiny_probability() -> Self {
        let t = Self::lit(1e-300);
        if t > Self::zero() {
            t
        } else {
            Self::min_positive_value()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
