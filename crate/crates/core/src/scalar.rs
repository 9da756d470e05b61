//! Scalar abstraction shared by the geometry and constitutive kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real number type accepted by the generic kernels: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("integer representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
