//! The 4f imaging model: object field, pupil field, aperture clipping, image field,
//! coherent PSF and transmission probability.
//!
//! Coordinates are dimensionless with `f lambda = 1` and unit magnification. The pupil
//! plane coordinate doubles as spatial frequency of the object field.

use std::fmt;
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{fourier_profile, fourier_transform, integrate, ComplexProfile, QuadratureSpec};
use crate::real::{lit, rect, sinc_n, Real};

/// How the transmission probability (and everything per emitted photon) is normalized.
///
/// `Paper` uses `p = (2 delta / pi) n(phi, s)`; `Physical` is the exact power ratio
/// `p = 2 delta n(phi, s)`. Per-detected quantities are identical in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    #[default]
    Paper,
    Physical,
}

impl Convention {
    /// Factor multiplying `2 delta n(phi, s)` to get the transmission probability.
    pub fn factor<T: Real>(self) -> T {
        match self {
            Convention::Paper => T::FRAC_1_PI(),
            Convention::Physical => T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Paper => "paper",
            Convention::Physical => "physical",
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Convention::Paper),
            "physical" => Ok(Convention::Physical),
            other => Err(Error::InvalidArgument(format!("unknown convention '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApertureKind<T> {
    /// `A(x) = 1`, no loss.
    Unobstructed,
    /// `A(x) = exp(-4 pi^2 sigma^2 x^2)`; the PSF `|u|^2` has standard deviation `sigma`.
    Gaussian { sigma: T },
    /// `A(x) = sum_i w_i exp(-4 pi^2 sigma_i^2 x^2)` with `w_i >= 0`, `sum w_i <= 1`.
    GaussianMixture { components: Vec<(T, T)> },
    /// `A(x) = 1` for `|x| < half_width`, else 0.
    HardEdge { half_width: T },
    /// Linearly interpolated samples `(x, A(x))`, zero outside the sampled range.
    Custom { samples: Vec<(T, T)> },
}

/// Pupil-plane transmission profile `A(x)`, even and passive.
#[derive(Clone)]
pub struct Aperture<T> {
    profile: ComplexProfile<T>,
    kind: ApertureKind<T>,
}

impl<T: fmt::Debug> fmt::Debug for Aperture<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Aperture").field("kind", &self.kind).finish()
    }
}

fn gaussian_amplitude<T: Real>(sigma: T, x: T) -> T {
    let c = lit::<T>(4.0) * T::PI() * T::PI() * sigma * sigma;
    (-c * x * x).exp()
}

impl<T: Real> Aperture<T> {
    pub fn unobstructed() -> Self {
        Self {
            profile: ComplexProfile::real(T::infinity(), |_| T::one()),
            kind: ApertureKind::Unobstructed,
        }
    }

    pub fn gaussian(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidAperture(format!("Gaussian width must be positive, got {sigma}")));
        }
        let decay = T::one() / (lit::<T>(2.0) * T::PI() * sigma);
        Ok(Self {
            profile: ComplexProfile::real(decay, move |x| gaussian_amplitude(sigma, x)),
            kind: ApertureKind::Gaussian { sigma },
        })
    }

    pub fn gaussian_mixture(components: Vec<(T, T)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidAperture("mixture needs at least one component".into()));
        }
        let mut total = T::zero();
        for &(w, s) in &components {
            if !(w >= T::zero()) || !(s > T::zero()) {
                return Err(Error::InvalidAperture(format!("bad mixture component (weight {w}, sigma {s})")));
            }
            total += w;
        }
        if total > T::one() + lit(1e-12) {
            return Err(Error::InvalidAperture(format!("mixture weights sum to {total} > 1")));
        }
        let min_sigma = components.iter().map(|c| c.1).fold(T::infinity(), T::min);
        let decay = T::one() / (lit::<T>(2.0) * T::PI() * min_sigma);
        let comps = components.clone();
        Ok(Self {
            profile: ComplexProfile::real(decay, move |x| {
                comps.iter().map(|&(w, s)| w * gaussian_amplitude(s, x)).sum()
            }),
            kind: ApertureKind::GaussianMixture { components },
        })
    }

    pub fn hard_edge(half_width: T) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidAperture(format!("half width must be positive, got {half_width}")));
        }
        let profile = ComplexProfile::real(half_width, move |x| rect(x / (lit::<T>(2.0) * half_width)))
            .with_breakpoints(vec![-half_width, half_width]);
        Ok(Self { profile, kind: ApertureKind::HardEdge { half_width } })
    }

    /// Sampled profile with linear interpolation. Samples need not be sorted.
    pub fn custom(mut samples: Vec<(T, T)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidAperture("custom aperture needs at least two samples".into()));
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidAperture("sample coordinates must be distinct and finite".into()));
        }
        let extent = samples.iter().map(|s| s.0.abs()).fold(T::zero(), T::max);
        let xs: Vec<T> = samples.iter().map(|s| s.0).collect();
        let table = samples.clone();
        let profile = ComplexProfile::real(extent, move |x| interpolate(&table, x)).with_breakpoints(xs);
        let ap = Self { profile, kind: ApertureKind::Custom { samples: samples.clone() } };
        // evenness and passivity at the sampled coordinates
        for &(x, a) in &samples {
            let mirrored = interpolate(&samples, -x);
            if (a - mirrored).abs() > lit(1e-12) {
                return Err(Error::InvalidAperture(format!("A({x}) = {a} but A({}) = {mirrored}", -x)));
            }
            if a.abs() > T::one() + lit(1e-12) {
                return Err(Error::InvalidAperture(format!("|A({x})| = {} exceeds 1", a.abs())));
            }
        }
        Ok(ap)
    }

    /// Reads a two-column text file (coordinate, transmission). `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidAperture(format!("{}: {e}", path.display())))?;
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidAperture(format!("{}:{}: cannot parse '{s}'", path.display(), lineno + 1))
                })
            };
            if cols.len() != 2 {
                return Err(Error::InvalidAperture(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    lineno + 1
                )));
            }
            samples.push((T::lit(parse(cols[0])?), T::lit(parse(cols[1])?)));
        }
        Self::custom(samples)
    }

    pub fn profile(&self) -> &ComplexProfile<T> {
        &self.profile
    }

    pub fn kind(&self) -> &ApertureKind<T> {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, x: T) -> Complex<T> {
        self.profile.eval(x)
    }

    /// PSF standard deviation for Gaussian apertures.
    pub fn psf_sigma(&self) -> Option<T> {
        match self.kind {
            ApertureKind::Gaussian { sigma } => Some(sigma),
            _ => None,
        }
    }

    pub fn is_unobstructed(&self) -> bool {
        matches!(self.kind, ApertureKind::Unobstructed)
    }

    /// Short label for reports.
    pub fn id(&self) -> String {
        match &self.kind {
            ApertureKind::Unobstructed => "unobstructed".into(),
            ApertureKind::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            ApertureKind::GaussianMixture { components } => format!("mixture({} components)", components.len()),
            ApertureKind::HardEdge { half_width } => format!("hard_edge(half_width={half_width})"),
            ApertureKind::Custom { samples } => format!("custom({} samples)", samples.len()),
        }
    }

    /// Checks `A(x) = A(-x)` and `|A(x)| <= 1` on a grid spanning the support.
    pub fn check_even_and_passive(&self) -> Result<()> {
        if self.is_unobstructed() {
            return Ok(());
        }
        let extent = lit::<T>(3.0) * self.profile.decay_scale();
        let n = 257;
        for i in 0..n {
            let x = extent * (lit::<T>(2.0) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1) - T::one());
            let (a, b) = (self.eval(x), self.eval(-x));
            if (a - b).norm() > lit(1e-12) {
                return Err(Error::InvalidAperture(format!("not even at x = {x}")));
            }
            if a.norm() > T::one() + lit(1e-12) {
                return Err(Error::InvalidAperture(format!("|A({x})| = {} exceeds 1", a.norm())));
            }
        }
        Ok(())
    }
}

fn interpolate<T: Real>(samples: &[(T, T)], x: T) -> T {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if x < first.0 || x > last.0 {
        return T::zero();
    }
    let idx = samples.partition_point(|s| s.0 <= x);
    if idx == 0 {
        return first.1;
    }
    if idx >= samples.len() {
        return last.1;
    }
    let (x0, y0) = samples[idx - 1];
    let (x1, y1) = samples[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Two rectangular sources of width `delta`, separated by `separation`, with complex
/// degree of coherence `coherence` and per-window emission probability `emission_prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePair<T> {
    pub separation: T,
    pub width: T,
    pub coherence: Complex<T>,
    pub emission_prob: T,
}

impl<T: Real> SourcePair<T> {
    pub fn new(separation: T, width: T, coherence: Complex<T>, emission_prob: T) -> Result<Self> {
        let src = Self { separation, width, coherence, emission_prob };
        src.validate()?;
        Ok(src)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > T::zero()) {
            return Err(Error::InvalidSource(format!("width must be positive, got {}", self.width)));
        }
        if !(self.separation > T::zero()) {
            return Err(Error::InvalidSource(format!("separation must be positive, got {}", self.separation)));
        }
        if self.separation < lit::<T>(10.0) * self.width {
            return Err(Error::InvalidSource(format!(
                "separation {} must be at least 10 source widths ({})",
                self.separation, self.width
            )));
        }
        check_coherence(self.coherence)?;
        if !(self.emission_prob > T::zero() && self.emission_prob <= lit(0.1)) {
            return Err(Error::InvalidSource(format!(
                "emission probability must lie in (0, 0.1], got {}",
                self.emission_prob
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_coherence<T: Real>(gamma: Complex<T>) -> Result<()> {
    let r = gamma.norm();
    if !(r <= T::one() + lit(1e-12)) {
        return Err(Error::InvalidCoherence(r.as_f64()));
    }
    Ok(())
}

/// Fields in the four planes of the 4f system for one relative phase.
#[derive(Debug, Clone)]
pub struct PlaneFields<T> {
    /// Object plane, `E_I`.
    pub object: ComplexProfile<T>,
    /// Just before the aperture, `E_II`.
    pub pupil: ComplexProfile<T>,
    /// Just after the aperture, `E_III = E_II A`.
    pub post_aperture: ComplexProfile<T>,
    /// Image plane, `E_IV`, the Fourier transform of `E_III`.
    pub image: ComplexProfile<T>,
}

/// Object field of two coherent rect sources with relative phase `phase`.
pub fn object_field<T: Real>(separation: T, width: T, phase: T) -> ComplexProfile<T> {
    let half_s = lit::<T>(0.5) * separation;
    let half_d = lit::<T>(0.5) * width;
    let half_phi = lit::<T>(0.5) * phase;
    let right = Complex::new(half_phi.cos(), -half_phi.sin());
    let left = right.conj();
    ComplexProfile::new(half_s + width, move |x| {
        right * rect((x - half_s) / width) + left * rect((x + half_s) / width)
    })
    .with_breakpoints(vec![-half_s - half_d, -half_s + half_d, half_s - half_d, half_s + half_d])
}

/// Closed-form pupil field `2 delta sinc_n(x delta) cos(pi x s + phi / 2)`.
pub fn pupil_field<T: Real>(separation: T, width: T, phase: T) -> ComplexProfile<T> {
    let two_d = lit::<T>(2.0) * width;
    let half_phi = lit::<T>(0.5) * phase;
    // the sinc envelope decays on the scale 1 / delta; quadrature over it needs an aperture
    ComplexProfile::real(T::one() / width, move |x| {
        two_d * sinc_n(x * width) * (T::PI() * x * separation + half_phi).cos()
    })
}

/// Decay scale of the image field for aperture `ap`.
fn image_decay<T: Real>(ap: &Aperture<T>, separation: T, width: T) -> T {
    let psf = T::one() / (T::PI() * ap.profile.decay_scale());
    psf + lit::<T>(0.5) * separation + width
}

pub fn propagate_4f<T: Real>(
    src: &SourcePair<T>,
    phase: T,
    ap: &Aperture<T>,
    spec: &QuadratureSpec<T>,
) -> Result<PlaneFields<T>> {
    src.validate()?;
    spec.validate()?;
    let object = object_field(src.separation, src.width, phase);
    let pupil = pupil_field(src.separation, src.width, phase);
    if ap.is_unobstructed() {
        // final lens undoes the first up to reflection
        let image = object.reflected();
        return Ok(PlaneFields { object, post_aperture: pupil.clone(), pupil, image });
    }
    let post_aperture = pupil.mul(ap.profile()).with_decay_scale(ap.profile.decay_scale());
    let image = fourier_profile(&post_aperture, image_decay(ap, src.separation, src.width), spec);
    Ok(PlaneFields { object, pupil, post_aperture, image })
}

/// Coherent PSF `u = A^`, closed form where the aperture allows it.
pub fn cpsf<T: Real>(ap: &Aperture<T>, spec: &QuadratureSpec<T>) -> Result<ComplexProfile<T>> {
    let two = lit::<T>(2.0);
    match ap.kind() {
        ApertureKind::Unobstructed => Err(Error::InvalidAperture("an unobstructed pupil has a Dirac cPSF".into())),
        ApertureKind::Gaussian { sigma } => {
            let sigma = *sigma;
            Ok(ComplexProfile::real(two * sigma, move |x| gaussian_cpsf(sigma, x)))
        }
        ApertureKind::GaussianMixture { components } => {
            let comps = components.clone();
            let widest = comps.iter().map(|c| c.1).fold(T::zero(), T::max);
            Ok(ComplexProfile::real(two * widest, move |x| {
                comps.iter().map(|&(w, s)| w * gaussian_cpsf(s, x)).sum()
            }))
        }
        ApertureKind::HardEdge { half_width } => {
            let hw = *half_width;
            Ok(ComplexProfile::real(T::one() / hw, move |x| two * hw * sinc_n(two * hw * x)))
        }
        ApertureKind::Custom { .. } => {
            spec.validate()?;
            let decay = T::one() / (T::PI() * ap.profile.decay_scale());
            Ok(fourier_profile(ap.profile(), decay, spec))
        }
    }
}

/// `du/dx` of the coherent PSF.
pub fn cpsf_derivative<T: Real>(ap: &Aperture<T>, spec: &QuadratureSpec<T>) -> Result<ComplexProfile<T>> {
    let two = lit::<T>(2.0);
    match ap.kind() {
        ApertureKind::Gaussian { sigma } => {
            let sigma = *sigma;
            Ok(ComplexProfile::real(two * sigma, move |x| {
                -x / (two * sigma * sigma) * gaussian_cpsf(sigma, x)
            }))
        }
        ApertureKind::GaussianMixture { components } => {
            let comps = components.clone();
            let widest = comps.iter().map(|c| c.1).fold(T::zero(), T::max);
            Ok(ComplexProfile::real(two * widest, move |x| {
                comps.iter().map(|&(w, s)| -w * x / (two * s * s) * gaussian_cpsf(s, x)).sum()
            }))
        }
        ApertureKind::Unobstructed => Err(Error::InvalidAperture("an unobstructed pupil has a Dirac cPSF".into())),
        _ => {
            // d/dx int A(k) exp(-i 2 pi k x) dk = int (-i 2 pi k) A(k) exp(-i 2 pi k x) dk
            spec.validate()?;
            let a = ap.profile().clone();
            let weighted = ComplexProfile::new(a.decay_scale(), move |k| {
                a.eval(k) * Complex::new(T::zero(), -two * T::PI() * k)
            })
            .with_breakpoints(ap.profile().breakpoints().to_vec());
            let decay = T::one() / (T::PI() * ap.profile.decay_scale());
            Ok(fourier_profile(&weighted, decay, spec))
        }
    }
}

/// `A^(x)` for the Gaussian aperture: `exp(-x^2 / (4 sigma^2)) / (2 sqrt(pi) sigma)`.
pub(crate) fn gaussian_cpsf<T: Real>(sigma: T, x: T) -> T {
    let two = lit::<T>(2.0);
    (-x * x / (two * two * sigma * sigma)).exp() / (two * T::PI().sqrt() * sigma)
}

/// Total power of the object field, `int |E_I|^2 = 2 delta`.
pub fn source_power<T: Real>(width: T) -> T {
    lit::<T>(2.0) * width
}

/// Exact power ratio transmitted by the aperture for relative phase `phase`.
pub fn transmission_probability<T: Real>(
    src: &SourcePair<T>,
    phase: T,
    ap: &Aperture<T>,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    src.validate()?;
    let denominator = source_power(src.width);
    if !(denominator > lit(1e-300)) {
        return Err(Error::DegenerateSource(denominator.as_f64()));
    }
    if ap.is_unobstructed() {
        return Ok(T::one());
    }
    let pupil = pupil_field(src.separation, src.width, phase);
    let passed = pupil.mul(ap.profile()).norm_sqr().with_decay_scale(ap.profile.decay_scale());
    let numerator = integrate(&passed, spec)?.re;
    Ok(numerator / denominator)
}

/// Transmission probability of a single rect mode of width `width` centred anywhere.
pub fn single_mode_transmission<T: Real>(ap: &Aperture<T>, width: T, spec: &QuadratureSpec<T>) -> Result<T> {
    if !(width > T::zero()) {
        return Err(Error::DegenerateSource(width.as_f64()));
    }
    if ap.is_unobstructed() {
        return Ok(T::one());
    }
    let a = ap.profile().clone();
    let integrand = ComplexProfile::real(a.decay_scale(), move |x| {
        let s = sinc_n(x * width);
        a.eval(x).norm_sqr() * s * s
    })
    .with_breakpoints(ap.profile().breakpoints().to_vec());
    Ok(width * integrate(&integrand, spec)?.re)
}

/// Object-plane profile of a single rect mode, used by Parseval checks.
pub fn rect_mode<T: Real>(center: T, width: T) -> ComplexProfile<T> {
    let half = lit::<T>(0.5) * width;
    ComplexProfile::real(center.abs() + width, move |x| rect((x - center) / width))
        .with_breakpoints(vec![center - half, center + half])
}

/// Fourier transform of the aperture by quadrature; the oracle for [`cpsf`].
pub fn cpsf_by_quadrature<T: Real>(ap: &Aperture<T>, x: T, spec: &QuadratureSpec<T>) -> Result<Complex<T>> {
    fourier_transform(ap.profile(), x, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::norm_sqr;
    use std::f64::consts::PI;

    fn src(s: f64, d: f64) -> SourcePair<f64> {
        SourcePair::new(s, d, Complex::new(0.0, 0.0), 0.01).unwrap()
    }

    #[test]
    fn pupil_at_origin() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0).unwrap();
        let f0 = propagate_4f(&src(1.0, 0.01), 0.0, &ap, &spec).unwrap();
        assert!((f0.pupil.eval(0.0).re - 0.02).abs() < 1e-15);
        let fpi = propagate_4f(&src(1.0, 0.01), PI, &ap, &spec).unwrap();
        assert!(fpi.pupil.eval(0.0).norm() < 1e-17);
    }

    #[test]
    fn pupil_is_transform_of_object() {
        let spec = QuadratureSpec::default();
        let (s, d, phi) = (1.3, 0.1, 0.7);
        let obj = object_field(s, d, phi);
        let pupil = pupil_field(s, d, phi);
        for k in [0.0, 0.4, -1.7, 3.3] {
            let q = fourier_transform(&obj, k, &spec).unwrap();
            assert!((q - pupil.eval(k)).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn object_power_is_two_delta() {
        let spec = QuadratureSpec::default();
        for d in [1e-3f64, 0.02, 0.3] {
            let p = norm_sqr(&object_field(5.0, d, 0.4), &spec).unwrap();
            assert!((p - 2.0 * d).abs() < 1e-10 * 2.0 * d);
        }
    }

    #[test]
    fn final_lens_is_unitary() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0).unwrap();
        let fields = propagate_4f(&src(1.0, 0.05), 0.9, &ap, &spec).unwrap();
        let before = norm_sqr(&fields.post_aperture, &spec).unwrap();
        let after = norm_sqr(&fields.image, &spec).unwrap();
        assert!((after / before - 1.0).abs() < 1e-9, "{}", after / before);
        // the pupil carries the full source power 2 delta
        assert!(before <= 2.0 * 0.05);
    }

    #[test]
    fn gaussian_cpsf_width() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0).unwrap();
        let u = cpsf(&ap, &spec).unwrap();
        let ratio = u.eval(1.0).norm_sqr() / u.eval(0.0).norm_sqr();
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-15);
        assert!((ratio - 0.6065307).abs() < 1e-7);
        // second moment of |u|^2 by quadrature
        let i = u.norm_sqr();
        let x2 = ComplexProfile::real(2.0, |x: f64| x * x).mul(&i);
        let var = crate::numerics::integrate(&x2, &spec).unwrap().re / crate::numerics::integrate(&i, &spec).unwrap().re;
        assert!((var - 1.0).abs() < 1e-10);
        // closed form agrees with the quadrature transform
        for x in [0.0, 0.5, 2.0, -3.1] {
            let q = cpsf_by_quadrature(&ap, x, &spec).unwrap();
            assert!((q - u.eval(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn hard_edge_cpsf_peak_and_realness() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::<f64>::hard_edge(0.8).unwrap();
        let u = cpsf(&ap, &spec).unwrap();
        let peak = u.eval(0.0);
        assert!(peak.im == 0.0 && peak.re > 0.0);
        for x in [0.1, 0.4, 1.3, 2.0] {
            assert!(u.eval(x).re <= peak.re);
            let q = cpsf_by_quadrature(&ap, x, &spec).unwrap();
            assert!(q.im.abs() < 1e-12, "{}", q.im);
            assert!((q - u.eval(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn custom_cpsf_real() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::<f64>::custom(vec![(-1.0, 0.0), (-0.5, 0.8), (0.0, 1.0), (0.5, 0.8), (1.0, 0.0)]).unwrap();
        let u = cpsf(&ap, &spec).unwrap();
        for x in [0.0, 0.3, 1.1] {
            assert!(u.eval(x).im.abs() < 1e-12);
        }
    }

    #[test]
    fn unobstructed_transmits_everything() {
        let spec = QuadratureSpec::default();
        let p = transmission_probability(&src(1.0, 0.01), 0.3, &Aperture::unobstructed(), &spec).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn gaussian_transmission_small_delta() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0).unwrap();
        let expected = 1e-3 / (8.0 * PI).sqrt();
        let mut first = None;
        for s in [0.02, 0.5, 1.0, 2.5, 5.0] {
            let p = transmission_probability(&src(s, 1e-3), PI / 2.0, &ap, &spec).unwrap();
            assert!((p - expected).abs() < 1e-6 * expected, "s = {s}: {p}");
            let f = *first.get_or_insert(p);
            assert!((p - f).abs() < 1e-6 * f);
        }
        assert!((expected - 1.9947e-4).abs() < 1e-8);
    }

    #[test]
    fn symmetric_branch_passes_more_power() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0).unwrap();
        let p0 = transmission_probability(&src(0.5, 1e-3), 0.0, &ap, &spec).unwrap();
        let ppi = transmission_probability(&src(0.5, 1e-3), PI, &ap, &spec).unwrap();
        assert!(p0 > ppi);
    }

    #[test]
    fn transmission_even_in_phase_and_monotone_in_aperture() {
        let spec = QuadratureSpec::default();
        let wide = Aperture::gaussian(0.5).unwrap();
        let narrow = Aperture::gaussian(1.0).unwrap();
        for phi in [0.3, 1.2, 2.9] {
            let a = transmission_probability(&src(0.8, 0.01), phi, &narrow, &spec).unwrap();
            let b = transmission_probability(&src(0.8, 0.01), -phi, &narrow, &spec).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
            // the sigma = 0.5 aperture dominates sigma = 1 pointwise
            let w = transmission_probability(&src(0.8, 0.01), phi, &wide, &spec).unwrap();
            assert!(w >= a && (0.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn transmission_linear_in_delta() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::gaussian(1.0).unwrap();
        let limit = 2.0 * 0.5 * (1.0 / (8.0 * PI).sqrt()) * (1.0 + (0.3f64).cos() * (-1.0f64 / 8.0).exp());
        let dev = |d: f64| {
            let p = transmission_probability(&src(1.0, d), 0.3, &ap, &spec).unwrap();
            (p / d - limit).abs()
        };
        let (e1, e2) = (dev(0.02), dev(0.01));
        // quadratic convergence of p / delta
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.05, "{order}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(Aperture::gaussian(-1.0).is_err());
        assert!(Aperture::custom(vec![(-1.0, 0.2), (0.0, 1.0), (1.0, 0.5)]).is_err());
        assert!(Aperture::custom(vec![(-1.0, 1.5), (1.0, 1.5)]).is_err());
        assert!(Aperture::gaussian_mixture(vec![(0.7, 1.0), (0.6, 2.0)]).is_err());
        assert!(SourcePair::new(1.0, 0.2, Complex::new(0.0, 0.0), 0.01).is_err());
        assert!(SourcePair::new(1.0, 0.01, Complex::new(0.9, 0.9), 0.01).is_err());
        assert!(SourcePair::new(1.0, 0.01, Complex::new(0.5, 0.0), 0.5).is_err());
    }

    #[test]
    fn custom_from_file() {
        let dir = std::env::temp_dir().join(format!("aperture-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ap.txt");
        std::fs::write(&path, "# x A\n-1 0\n0 1\n1 0\n").unwrap();
        let ap = Aperture::<f64>::from_file(&path).unwrap();
        assert!((ap.eval(0.5).re - 0.5).abs() < 1e-15);
        assert_eq!(ap.eval(2.0).re, 0.0);
        ap.check_even_and_passive().unwrap();
        std::fs::remove_dir_all(&dir).ok();
    }
}
