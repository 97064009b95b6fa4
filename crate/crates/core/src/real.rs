use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type for all numerical kernels: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant not representable in scalar type")
}
