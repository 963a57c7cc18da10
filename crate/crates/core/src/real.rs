//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::{de::DeserializeOwned, Serialize};

/// Real scalar type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Scale a tolerance written for `f64` to this type's precision.
    fn tol(x: f64) -> Self {
        let eps_ratio = Self::epsilon().to_f64_lossy() / f64::EPSILON;
        Self::lit(x * eps_ratio.max(1.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex counterpart of a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Principal argument helpers used by the residue evaluator.
#[inline]
pub fn is_finite_c<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_scales_with_precision() {
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
        let t32 = <f32 as Real>::tol(1e-12);
        assert!(t32 > 1e-6 && t32 < 1e-3, "{t32}");
    }
}
