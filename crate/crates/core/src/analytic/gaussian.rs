//! Closed forms for the Gaussian aperture `A(x) = exp(-4 pi^2 sigma^2 x^2)`.
//!
//! With `g = exp(-s^2 / (8 sigma^2))`, `t = s^2 / (4 sigma^2)` and `R = Re(gamma)`:
//!
//! ```text
//! F_em      = K (1 - R g (1 - t))
//! F_det     = P (1 - R g (1 - t)) / (1 + R g)
//! F_em^(1)  = K (1 - R^2 g^2 + t R g) / (1 + R g)
//! F_det^(1) = P (1 - R^2 g^2 + t R g) / (1 + R g)^2
//! ```
//!
//! with `K = 1 / (8 sqrt(2) pi^(3/2) sigma^3)` and `P = 1 / (4 sigma^2)`. Each bracket is
//! rearranged so that no step subtracts nearly equal numbers, which matters near
//! `R = -1`, `s -> 0` where the brackets vanish.

use num_complex::Complex;

use super::report::{QfiParams, QfiReport};
use crate::error::{Error, Result};
use crate::optics::Convention;
use crate::real::{lit, Real};

/// The four QFI values for a Gaussian aperture, paper convention, per unit `delta` where
/// per-emitted.
pub fn gaussian_closed_forms<T: Real>(sigma: T, s: T, re_gamma: T) -> Result<QfiReport<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidAperture(format!("Gaussian width must be positive, got {sigma}")));
    }
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("separation must be non-negative, got {s}")));
    }
    if !(re_gamma.abs() <= T::one() + lit(1e-12)) {
        return Err(Error::InvalidCoherence(re_gamma.as_f64()));
    }
    let r = re_gamma.max(-T::one()).min(T::one());
    let one = T::one();
    let two = lit::<T>(2.0);
    let pi = T::PI();

    let q = s * s / (lit::<T>(8.0) * sigma * sigma);
    let g = (-q).exp();
    let e = -(-q).exp_m1();
    let t = two * q;

    // 1 + R g
    let denom = if r >= T::zero() { one + r * g } else { (one + r) + r.abs() * e };
    // 1 - R g (1 - t)
    let em_bracket = if r >= T::zero() {
        (one - r) + r * e + r * g * t
    } else {
        one + r.abs() * g * (one - t)
    };
    // 1 - R^2 g^2 + t R g
    let single_bracket = if r >= T::zero() {
        let one_minus = (one - r) + r * e;
        one_minus * denom + t * r * g
    } else {
        excess(t, g) + (one - r * r) * g * g + t * (one + r) * g
    };

    let k = one / (lit::<T>(8.0) * two.sqrt() * pi * pi.sqrt() * sigma * sigma * sigma);
    let p = one / (lit::<T>(4.0) * sigma * sigma);
    let tr = one / (two * two.sqrt() * pi * pi.sqrt() * sigma);

    let params = QfiParams {
        aperture: format!("gaussian(sigma={sigma})"),
        sigma: Some(sigma),
        separation: s,
        coherence: Complex::new(re_gamma, T::zero()),
        convention: Convention::Paper,
    };
    let mut report = QfiReport {
        f_em_full: k * em_bracket,
        f_det_full: p * em_bracket / denom,
        f_em_single: k * single_bracket / denom,
        f_det_single: p * single_bracket / (denom * denom),
        transmission: tr * denom,
        transmission_slope: -tr * r * g * s / (lit::<T>(4.0) * sigma * sigma),
        params,
    };
    if denom <= T::zero() {
        // R = -1, s = 0: nothing is transmitted; the normalized state carries no information
        report.f_det_full = T::infinity();
        report.f_em_single = T::zero();
        report.f_det_single = T::zero();
        return Err(Error::DivergentPerDetected {
            s: s.as_f64(),
            re_gamma: re_gamma.as_f64(),
            partial: Box::new(report.to_f64()),
        });
    }
    Ok(report)
}

/// `g (2 sinh(t/2) - t) = 1 - g^2 - t g`, evaluated without cancellation for small `t`.
fn excess<T: Real>(t: T, g: T) -> T {
    let y = lit::<T>(0.5) * t;
    let core = if y < lit(0.1) {
        // 2 (sinh y - y) = 2 (y^3/3! + y^5/5! + y^7/7! + y^9/9! + y^11/11!)
        let y2 = y * y;
        let series = lit::<T>(1.0 / 6.0)
            + y2 * (lit::<T>(1.0 / 120.0)
                + y2 * (lit::<T>(1.0 / 5040.0) + y2 * (lit::<T>(1.0 / 362880.0) + y2 * lit::<T>(1.0 / 39916800.0))));
        lit::<T>(2.0) * y * y2 * series
    } else {
        lit::<T>(2.0) * (y.sinh() - y)
    };
    g * core
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// The brackets written out exactly as displayed, for comparison away from the corner.
    fn verbatim(sigma: f64, s: f64, r: f64) -> [f64; 4] {
        let g = (-s * s / (8.0 * sigma * sigma)).exp();
        let k = 1.0 / (8.0 * 2f64.sqrt() * PI.powf(1.5) * sigma.powi(3));
        let p = 1.0 / (4.0 * sigma * sigma);
        let em = k * (1.0 - (1.0 - s * s / (4.0 * sigma * sigma)) * r * g);
        let det = p * (1.0 + 2.0 * r * g * (s * s / (8.0 * sigma * sigma) - 1.0) / (1.0 + r * g));
        let num = 1.0 - (r * g - s * s / (4.0 * sigma * sigma)) * r * g;
        [em, det, k * num / (1.0 + r * g), p * num / (1.0 + r * g).powi(2)]
    }

    #[test]
    fn matches_verbatim_forms_where_well_conditioned() {
        for sigma in [0.5, 1.0, 2.0] {
            for s in [0.3, 1.0, 2.0, 5.0] {
                for r in [-0.9, -0.3, 0.0, 0.4, 1.0] {
                    let rep = gaussian_closed_forms(sigma, s * sigma, r).unwrap();
                    for (a, b) in rep.values().iter().zip(verbatim(sigma, s * sigma, r)) {
                        assert!((a - b).abs() < 1e-13 * b.abs(), "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn incoherent_detected_qfi_is_quarter() {
        for s in [0.01, 0.5, 2.0, 4.0] {
            let rep = gaussian_closed_forms(1.0f64, s, 0.0).unwrap();
            assert!((rep.f_det_full - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn emitted_qfi_at_two_sigma_is_coherence_free() {
        let want = 1.0 / (8.0 * 2f64.sqrt() * PI.powf(1.5));
        assert!((want - 0.0158730).abs() < 1e-6);
        for r in [-1.0, -0.5, 0.0, 0.7, 1.0] {
            let rep = gaussian_closed_forms(1.0f64, 2.0, r).unwrap();
            assert!((rep.f_em_full - want).abs() < 1e-15);
        }
    }

    #[test]
    fn worked_values() {
        let rep = gaussian_closed_forms(1.0f64, 2.0, 1.0).unwrap();
        assert!((rep.f_det_full - 0.25 / (1.0 + (-0.5f64).exp())).abs() < 1e-15);
        assert!((rep.f_det_full - 0.1556155).abs() < 1e-6);
        let near = gaussian_closed_forms(1.0f64, 1e-7, -0.98).unwrap();
        assert!((near.f_det_full - 24.75).abs() < 1e-9);
        let a = gaussian_closed_forms(1.0f64, 0.0, -1.0);
        let b = gaussian_closed_forms(1.0f64, 0.0, 0.0).unwrap();
        match a {
            Err(Error::DivergentPerDetected { partial, .. }) => {
                assert!((partial.f_em_full / b.f_em_full - 2.0).abs() < 1e-15);
                assert!(partial.f_det_full.is_infinite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn stable_near_the_corner() {
        // f_det^(1) ~ t / 24 for R = -1 and small t, with t = s^2 / 4
        let s = 1e-3;
        let rep = gaussian_closed_forms(1.0f64, s, -1.0).unwrap();
        let t = s * s / 4.0;
        let approx = 0.25 * (t / 6.0);
        assert!((rep.f_det_single / approx - 1.0).abs() < 1e-5, "{}", rep.f_det_single / approx);
        assert!(rep.f_det_full > 1e5);
    }

    #[test]
    fn product_identity() {
        for r in [-0.98, 0.0, 0.5] {
            let rep = gaussian_closed_forms(1.3f64, 0.9, r).unwrap();
            assert!((rep.f_em_full - rep.transmission * rep.f_det_full).abs() < 1e-14 * rep.f_em_full);
            assert!((rep.f_em_single - rep.transmission * rep.f_det_single).abs() < 1e-14 * rep.f_em_single);
        }
    }

    #[test]
    fn single_precision() {
        let rep = gaussian_closed_forms(1.0f32, 2.0, 1.0).unwrap();
        assert!((rep.f_det_full - 0.1556155).abs() < 1e-6);
    }
}
