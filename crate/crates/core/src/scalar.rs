//! Scalar abstraction: the solvers are generic over the real scalar type.

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by every solver in this crate (`f32`, `f64`).
pub trait Scalar: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Scalar for T where T: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn s<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("scalar conversion from f64")
}

/// Convert the working scalar back to `f64` (for diagnostics and error reports).
#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().expect("scalar conversion to f64")
}
