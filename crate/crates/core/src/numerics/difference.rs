use num_complex::Complex;

use super::profile::ComplexProfile;
use crate::error::{Error, Result};
use crate::real::{lit, Real};

fn check_step<T: Real>(s: T, step: T) -> Result<()> {
    if !(step > lit::<T>(256.0) * T::epsilon() * s.abs().max(T::one())) {
        return Err(Error::StepUnderflow { step: step.as_f64(), at: s.as_f64() });
    }
    Ok(())
}

/// Richardson-extrapolated central difference of an `s`-parameterized profile family.
///
/// Combines `D(h)` and `D(h/2)` as `(4 D(h/2) - D(h)) / 3`, which cancels the `h^2`
/// term and leaves an `O(h^4)` error.
pub fn central_difference<T, F>(family: F, s: T, step: T) -> Result<ComplexProfile<T>>
where
    T: Real,
    F: Fn(T) -> ComplexProfile<T>,
{
    check_step(s, step)?;
    let half = lit::<T>(0.5) * step;
    let plus_h = family(s + step);
    let minus_h = family(s - step);
    let plus_half = family(s + half);
    let minus_half = family(s - half);
    // (4 (f(s+h/2) - f(s-h/2)) / h - (f(s+h) - f(s-h)) / (2h)) / 3
    let c_half = lit::<T>(4.0) / (lit::<T>(3.0) * step);
    let c_full = T::one() / (lit::<T>(6.0) * step);
    let c = |v: T| Complex::new(v, T::zero());
    Ok(ComplexProfile::combine(&[
        (c(c_half), &plus_half),
        (c(-c_half), &minus_half),
        (c(-c_full), &plus_h),
        (c(c_full), &minus_h),
    ]))
}

/// The same scheme applied to a scalar function of `s`.
pub fn richardson_derivative<T, F>(f: F, s: T, step: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    check_step(s, step)?;
    let half = lit::<T>(0.5) * step;
    let d_full = (f(s + step)? - f(s - step)?) / (lit::<T>(2.0) * step);
    let d_half = (f(s + half)? - f(s - half)?) / step;
    Ok((lit::<T>(4.0) * d_half - d_full) / lit(3.0))
}
