//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the crate is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Relative tolerance adaptive quadrature aims for by default at this precision.
    fn default_quadrature_tolerance() -> Self;

    /// Converts an `f64` literal. Every value used in the crate fits in `f32` range.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index out of range")
    }
}

impl Real for f32 {
    fn default_quadrature_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn default_quadrature_tolerance() -> Self {
        1e-10
    }
}

/// Shorthand for [`Real::lit`].
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Normalized sinc, `sin(pi u) / (pi u)`.
pub fn sinc_n<T: Real>(u: T) -> T {
    let z = T::PI() * u;
    if z.abs() < lit(1e-4) {
        let z2 = z * z;
        T::one() - z2 / lit(6.0) + z2 * z2 / lit(120.0)
    } else {
        z.sin() / z
    }
}

/// Unit rect: 1 inside `|t| < 1/2`, 1/2 on the edge, 0 outside.
pub fn rect<T: Real>(t: T) -> T {
    let a = t.abs();
    let half = lit::<T>(0.5);
    if a < half {
        T::one()
    } else if a == half {
        half
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_zeros_and_origin() {
        assert_eq!(sinc_n(0.0f64), 1.0);
        assert!(sinc_n(1.0f64).abs() < 1e-16);
        assert!(sinc_n(2.0f64).abs() < 1e-16);
        // series branch stays continuous with the direct formula
        let u = 0.99e-4 / std::f64::consts::PI;
        let direct = (std::f64::consts::PI * u).sin() / (std::f64::consts::PI * u);
        assert!((sinc_n(u) - direct).abs() < 1e-15);
    }

    #[test]
    fn rect_edges() {
        assert_eq!(rect(0.0f32), 1.0);
        assert_eq!(rect(0.5f32), 0.5);
        assert_eq!(rect(-0.7f64), 0.0);
    }
}
