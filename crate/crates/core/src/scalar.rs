//! Scalar abstraction: the solvers run over any IEEE float supported by the
//! FFT and linear-algebra backends (`f32` or `f64` in practice).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point scalar usable throughout the crate.
///
/// Concrete aliases for the `f64` instantiation live at the crate root.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + FftNum
    + Sum<Self>
    + Default
    + Display
    + LowerExp
    + Debug
{
    /// Shorthand for embedding an `f64` constant.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("constant not representable in scalar type")
    }

    #[inline]
    fn from_usize_(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize not representable in scalar type")
    }

    #[inline]
    fn to_f64_(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
