//! Scalar abstraction shared by the variational engine and the closed-form bounds.
//!
//! Everything that is pure algebra (kinematics, Gaussian matrix elements, the
//! generalized eigenproblem, the Ahlrichs and CLR formulas) is written against
//! [`Scalar`] so it runs in `f32` or `f64`. The numerically delicate drivers
//! (ODE-based resolvent kernels, quadrature diagnostics, bisection scans) are
//! `f64` only.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::Serialize;

pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + Serialize
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar convertible to f64")
    }

    /// Relative machine epsilon of the type.
    fn eps() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(<f64 as Scalar>::lit(0.25).as_f64(), 0.25);
        assert_eq!(<f32 as Scalar>::lit(0.5).as_f64(), 0.5);
    }
}
