//! Gram-matrix ceiling on the per-mode transmission of a passive imaging system, and the
//! detection probability through the spatial and frequency routes.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{fourier_profile, integrate, inner, norm_sqr, ComplexProfile, QuadratureSpec};
use crate::optics::Aperture;
use crate::real::{lit, Real};

/// Ceiling `M / sum_ij |<phi_i|phi_j>|` for `M` images of one PSF on a grid of spacing `delta`.
///
/// Equal spacing makes the Gram matrix Toeplitz, so only its first row is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBound<T> {
    pub mode_count: usize,
    pub spacing: T,
    /// `lags[k] = <u|u(. - k delta)>`.
    pub lags: Vec<Complex<T>>,
    pub abs_sum: T,
    pub bound: T,
}

impl<T: Real> GramBound<T> {
    fn from_lags(lags: Vec<Complex<T>>, spacing: T) -> Self {
        let m = lags.len();
        let mf = T::from_usize_lossy(m);
        let off: T = lags
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| T::from_usize_lossy(m - k) * c.norm())
            .sum();
        let abs_sum = mf * lags[0].norm() + lit::<T>(2.0) * off;
        Self { mode_count: m, spacing, lags, abs_sum, bound: mf / abs_sum }
    }

    /// `<phi_i|phi_j>`.
    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        if j >= i {
            self.lags[j - i]
        } else {
            self.lags[i - j].conj()
        }
    }

    /// `bound sigma / delta`, the constant of the small-spacing asymptote.
    pub fn asymptotic_constant(&self, sigma: T) -> T {
        self.bound * sigma / self.spacing
    }
}

fn check_args<T: Real>(modes: usize, spacing: T) -> Result<()> {
    if modes == 0 {
        return Err(Error::InvalidArgument("mode count must be at least 1".into()));
    }
    if !(spacing > T::zero()) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!("spacing must be positive, got {spacing}")));
    }
    Ok(())
}

/// Gram bound with every lag computed by quadrature. `u` must have unit norm.
pub fn gram_bound<T: Real>(u: &ComplexProfile<T>, modes: usize, spacing: T, spec: &QuadratureSpec<T>) -> Result<GramBound<T>> {
    check_args(modes, spacing)?;
    let norm = norm_sqr(u, spec)?;
    if (norm - T::one()).abs() > lit(1e-10) {
        return Err(Error::UnnormalizedPsf(norm.as_f64()));
    }
    let mut lags = Vec::with_capacity(modes);
    lags.push(Complex::new(T::one(), T::zero()));
    for k in 1..modes {
        let shifted = u.shifted(T::from_usize_lossy(k) * spacing);
        let both = u.clone().with_decay_scale(u.decay_scale() + T::from_usize_lossy(k) * spacing / lit(24.0));
        lags.push(inner(&both, &shifted, spec)?);
    }
    Ok(GramBound::from_lags(lags, spacing))
}

/// Gram bound for the Gaussian PSF `|u|^2 ~ N(0, sigma^2)`, whose lags are
/// `exp(-k^2 delta^2 / (8 sigma^2))`.
pub fn gaussian_gram_bound<T: Real>(sigma: T, modes: usize, spacing: T) -> Result<GramBound<T>> {
    check_args(modes, spacing)?;
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let a = spacing * spacing / (lit::<T>(8.0) * sigma * sigma);
    let lags = (0..modes)
        .map(|k| {
            let kf = T::from_usize_lossy(k);
            Complex::new((-a * kf * kf).exp(), T::zero())
        })
        .collect();
    Ok(GramBound::from_lags(lags, spacing))
}

/// Unit-norm Gaussian PSF with intensity standard deviation `sigma`.
pub fn normalized_gaussian_psf<T: Real>(sigma: T) -> ComplexProfile<T> {
    let norm = (lit::<T>(2.0) * T::PI() * sigma * sigma).powf(lit(-0.25));
    ComplexProfile::real(lit::<T>(2.0) * sigma, move |x| norm * (-x * x / (lit::<T>(4.0) * sigma * sigma)).exp())
}

/// Gram bound for the normalized cPSF of `ap`, with lags taken in the pupil plane as
/// `int |A(f)|^2 e^{-2 pi i f k delta} df / int |A|^2`. Suits apertures whose cPSF has
/// slowly decaying tails, such as the hard edge.
pub fn pupil_gram_bound<T: Real>(ap: &Aperture<T>, modes: usize, spacing: T, spec: &QuadratureSpec<T>) -> Result<GramBound<T>> {
    check_args(modes, spacing)?;
    if ap.is_unobstructed() {
        return Err(Error::InvalidAperture("an unobstructed pupil has no normalizable cPSF".into()));
    }
    let power = ap.profile().norm_sqr();
    let total = integrate(&power, spec)?.re;
    if !(total > T::zero()) {
        return Err(Error::InvalidAperture(format!("aperture transmits no power ({total})")));
    }
    let mut lags = Vec::with_capacity(modes);
    lags.push(Complex::new(T::one(), T::zero()));
    for k in 1..modes {
        let tau = T::from_usize_lossy(k) * spacing;
        let p = power.clone();
        let two_pi_tau = lit::<T>(2.0) * T::PI() * tau;
        let phased = ComplexProfile::new(power.decay_scale(), move |f| p.eval(f) * Complex::new(T::zero(), -two_pi_tau * f).exp())
            .with_breakpoints(power.breakpoints().to_vec());
        lags.push(integrate(&phased, spec)? / total);
    }
    Ok(GramBound::from_lags(lags, spacing))
}

/// Largest deviation between the closed-form Gaussian Gram entries and quadrature over
/// the given index pairs.
pub fn spot_check_gaussian_gram<T: Real>(bound: &GramBound<T>, sigma: T, pairs: &[(usize, usize)], spec: &QuadratureSpec<T>) -> Result<T> {
    let u = normalized_gaussian_psf(sigma);
    let mut worst = T::zero();
    for &(i, j) in pairs {
        if i >= bound.mode_count || j >= bound.mode_count {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) outside {} modes", bound.mode_count)));
        }
        let xi = T::from_usize_lossy(i) * bound.spacing;
        let xj = T::from_usize_lossy(j) * bound.spacing;
        let ui = u.shifted(xi).with_decay_scale(lit::<T>(2.0) * sigma + (xi.abs().max(xj.abs())) / lit(12.0));
        let q = inner(&ui, &u.shifted(xj), spec)?;
        worst = worst.max((q - bound.entry(i, j)).norm());
    }
    Ok(worst)
}

/// Relative disagreement between the two routes that triggers [`Error::ParsevalMismatch`].
const ROUTE_TOLERANCE: f64 = 1e-8;

/// Detection probability `scale int |(E * u)(x)|^2 dx`, also evaluated as
/// `scale int |E^(k) u^(k)|^2 dk`. Returns both values, spatial first.
pub fn detection_probability_routes<T: Real>(
    field: &ComplexProfile<T>,
    u: &ComplexProfile<T>,
    scale: T,
    spec: &QuadratureSpec<T>,
) -> Result<(T, T)> {
    if !(scale > T::zero()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let tight = spec.with_tolerance(spec.rel_tolerance.min(lit(1e-13)).max(lit::<T>(256.0) * T::epsilon()));

    // Young: |E * u|_2 <= |E|_2 |u|_1 sets the scale below which stalled refinement is noise
    let l1 = integrate(&ComplexProfile::real(u.decay_scale(), {
        let u = u.clone();
        move |x| u.eval(x).norm()
    }), spec)?
    .re;
    let noise = lit::<T>(1e-14) * norm_sqr(field, spec)? * l1 * l1;

    let (e, kernel) = (field.clone(), u.clone());
    let (field_decay, kernel_decay) = (field.decay_scale(), u.decay_scale());
    let (field_breaks, kernel_breaks) = (field.breakpoints().to_vec(), u.breakpoints().to_vec());
    let convolved = ComplexProfile::new(field_decay + kernel_decay, move |x| {
        let (e, kernel) = (e.clone(), kernel.clone());
        // integrate over the variable of the narrower factor
        let integrand = if field_decay <= kernel_decay {
            let mut points = field_breaks.clone();
            points.push(x);
            ComplexProfile::new(field_decay, move |y| e.eval(y) * kernel.eval(x - y)).with_breakpoints(points)
        } else {
            let mut points = kernel_breaks.clone();
            points.extend(field_breaks.iter().map(|&b| x - b));
            points.push(T::zero());
            ComplexProfile::new(kernel_decay, move |t| e.eval(x - t) * kernel.eval(t)).with_breakpoints(points)
        };
        integrate(&integrand, &tight).unwrap_or_else(|_| Complex::new(T::nan(), T::nan()))
    });
    let spatial = scale * norm_sqr(&convolved, &spec.with_abs_tolerance(noise))?;

    let freq_decay = T::one() / (T::PI() * u.decay_scale().max(field.decay_scale()));
    let e_hat = fourier_profile(field, freq_decay, &tight);
    let u_hat = fourier_profile(u, freq_decay, &tight);
    let product = e_hat.mul(&u_hat).with_decay_scale(freq_decay).with_breakpoints(vec![T::zero()]);
    let frequency = scale * norm_sqr(&product, &spec.with_abs_tolerance(noise))?;
    Ok((spatial, frequency))
}

/// Detection probability through a system with coherent PSF `u`, cross-checked between
/// the spatial and frequency routes.
pub fn detection_probability_frequency<T: Real>(
    field: &ComplexProfile<T>,
    u: &ComplexProfile<T>,
    scale: T,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    let (spatial, frequency) = detection_probability_routes(field, u, scale, spec)?;
    let floor = scale * norm_sqr(field, spec)? * lit(1e-14);
    if (spatial - frequency).abs() > lit::<T>(ROUTE_TOLERANCE) * spatial.max(frequency) + floor {
        return Err(Error::ParsevalMismatch { spatial: spatial.as_f64(), frequency: frequency.as_f64() });
    }
    Ok(frequency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{cpsf, object_field, pupil_field, single_mode_transmission, Aperture};

    fn slope(modes: usize) -> f64 {
        let (lo, hi) = (0.005f64, 0.02f64);
        let b = |d: f64| gaussian_gram_bound(1.0, modes, d).unwrap().bound;
        (b(hi) / b(lo)).ln() / (hi / lo).ln()
    }

    #[test]
    fn single_mode_is_unbounded() {
        let spec = QuadratureSpec::default();
        assert_eq!(gram_bound(&normalized_gaussian_psf(1.3f64), 1, 0.2, &spec).unwrap().bound, 1.0);
        assert_eq!(gaussian_gram_bound(1.0f64, 1, 0.2).unwrap().bound, 1.0);
    }

    #[test]
    fn two_distant_modes() {
        let spec = QuadratureSpec::default();
        let want = 2.0 / (2.0 + 2.0 * (-12.5f64).exp());
        let q = gram_bound(&normalized_gaussian_psf(1.0f64), 2, 10.0, &spec).unwrap();
        assert!((q.bound - want).abs() < 1e-12);
        assert!((q.bound - 0.9999963).abs() < 1e-7);
        let c = gaussian_gram_bound(1.0f64, 2, 10.0).unwrap();
        assert!((c.bound - want).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let spec = QuadratureSpec::default();
        let q = gram_bound(&normalized_gaussian_psf(0.8f64), 60, 0.3, &spec).unwrap();
        let c = gaussian_gram_bound(0.8f64, 60, 0.3).unwrap();
        assert!((q.bound / c.bound - 1.0).abs() < 1e-10);
        let pairs: Vec<_> = (0..60).step_by(7).flat_map(|i| [(i, 59 - i), (i, i / 2)]).collect();
        assert!(spot_check_gaussian_gram(&c, 0.8, &pairs, &spec).unwrap() < 1e-10);
        assert!((q.entry(3, 10) - c.entry(10, 3)).norm() < 1e-10);
    }

    #[test]
    fn pupil_route_matches_spatial_route() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(0.8f64).unwrap();
        let p = pupil_gram_bound(&ap, 40, 0.3, &spec).unwrap();
        let c = gaussian_gram_bound(0.8f64, 40, 0.3).unwrap();
        assert!((p.bound / c.bound - 1.0).abs() < 1e-10);
        // hard edge of half-width h: lags sinc_n(2 h k delta)
        let hard = pupil_gram_bound(&Aperture::hard_edge(0.5f64).unwrap(), 5, 0.25, &spec).unwrap();
        for (k, lag) in hard.lags.iter().enumerate() {
            let x = std::f64::consts::PI * 0.25 * k as f64;
            let want = if k == 0 { 1.0 } else { x.sin() / x };
            assert!((lag - Complex::new(want, 0.0)).norm() < 1e-10, "{k}: {lag}");
        }
        assert!(pupil_gram_bound(&Aperture::unobstructed(), 3, 0.1, &spec).is_err());
    }

    #[test]
    fn unnormalized_psf_is_rejected() {
        let spec = QuadratureSpec::default();
        let u = normalized_gaussian_psf(1.0f64).scale(Complex::new(1.1, 0.0));
        assert!(matches!(gram_bound(&u, 3, 0.1, &spec), Err(Error::UnnormalizedPsf(_))));
    }

    #[test]
    fn bound_scales_linearly_with_spacing() {
        assert!((slope(100_000) - 1.0).abs() < 0.01);
        // a thousand modes over [0.005, 0.02] span at most 20 sigma: not yet asymptotic
        assert!(slope(1000) < 0.99);
        let c = gaussian_gram_bound(1.0f64, 100_000, 0.01).unwrap().asymptotic_constant(1.0);
        assert!((c - 1.0 / (8.0 * std::f64::consts::PI).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn bound_is_monotone_in_mode_count() {
        let mut last = 1.0f64;
        for m in [1, 2, 5, 20, 100, 500, 2000] {
            let b = gaussian_gram_bound(1.0, m, 0.05).unwrap().bound;
            assert!(b <= last + 1e-15);
            last = b;
        }
    }

    #[test]
    fn bound_dominates_4f_transmission() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0f64).unwrap();
        for d in [1e-3, 1e-2, 0.1] {
            let p = single_mode_transmission(&ap, d, &spec).unwrap();
            for m in [1, 10, 200, 2000] {
                let b = gaussian_gram_bound(1.0, m, d).unwrap().bound;
                assert!(p <= b * (1.0 + 1e-6), "delta {d}, M {m}: {p} > {b}");
            }
        }
    }

    #[test]
    fn narrow_psf_passes_everything() {
        let spec = QuadratureSpec::default();
        let field = normalized_gaussian_psf(0.7f64).shifted(0.4);
        // unit-integral Gaussian of intensity width w
        let w = 1e-3f64;
        let u = normalized_gaussian_psf(w).scale(Complex::new(1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt() * w).sqrt(), 0.0));
        let p = detection_probability_frequency(&field, &u, 2.0, &spec).unwrap();
        assert!((p / 2.0 - 1.0).abs() < 1e-5, "{p}");
    }

    #[test]
    fn routes_agree_for_rect_sources() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0f64).unwrap();
        let u = cpsf(&ap, &spec).unwrap();
        let (s, d, phi) = (1.3, 0.05, 0.7);
        let e = object_field(s, d, phi);
        let (spatial, frequency) = detection_probability_routes(&e, &u, 1.0, &spec).unwrap();
        assert!((spatial / frequency - 1.0).abs() < 1e-10, "{spatial} vs {frequency}");
        let a = ap.profile().clone();
        let pupil = pupil_field(s, d, phi);
        let direct = ComplexProfile::new(a.decay_scale(), move |x| Complex::new((pupil.eval(x) * a.eval(x)).norm_sqr(), 0.0));
        let want = integrate(&direct, &spec).unwrap().re;
        assert!((frequency / want - 1.0).abs() < 1e-8);
    }

    #[test]
    fn filtered_field_is_not_detected() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0f64).unwrap();
        let u = cpsf(&ap, &spec).unwrap();
        let k0 = 3.0;
        let carrier = normalized_gaussian_psf(3.0f64);
        let field = ComplexProfile::new(6.0, move |x| carrier.eval(x) * (2.0 * std::f64::consts::PI * k0 * x).cos());
        let p = detection_probability_frequency(&field, &u, 1.0, &spec).unwrap();
        assert!(p < 1e-12, "{p}");
    }
}
