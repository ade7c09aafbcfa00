use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex;

use super::profile::ComplexProfile;
use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Points per Gauss-Legendre panel.
const RULE_ORDER: usize = 16;
/// Panels the domain is cut into before adaptation starts.
const INITIAL_PANELS: usize = 8;

/// How far the truncated integration domain `[-X, X]` extends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfWidth<T> {
    /// `X` in absolute coordinate units.
    Fixed(T),
    /// `X` as a multiple of the integrand's decay scale.
    DecayMultiple(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub half_width: HalfWidth<T>,
    /// Maximum number of integrand evaluations.
    pub node_budget: usize,
    pub rel_tolerance: T,
    /// Absolute error that is always accepted; zero by default.
    pub abs_tolerance: T,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        Self {
            half_width: HalfWidth::DecayMultiple(lit(12.0)),
            node_budget: 400_000,
            rel_tolerance: T::default_quadrature_tolerance(),
            abs_tolerance: T::zero(),
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn with_half_width(half_width: T) -> Self {
        Self { half_width: HalfWidth::Fixed(half_width), ..Self::default() }
    }

    pub fn with_tolerance(mut self, rel_tolerance: T) -> Self {
        self.rel_tolerance = rel_tolerance;
        self
    }

    pub fn with_abs_tolerance(mut self, abs_tolerance: T) -> Self {
        self.abs_tolerance = abs_tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let x = match self.half_width {
            HalfWidth::Fixed(x) | HalfWidth::DecayMultiple(x) => x,
        };
        if !(x > T::zero()) || !x.is_finite() {
            return Err(Error::InvalidQuadrature(format!("half width must be positive, got {x}")));
        }
        if !(self.rel_tolerance > T::zero() && self.rel_tolerance <= lit(1e-3)) {
            return Err(Error::InvalidQuadrature(format!(
                "relative tolerance must lie in (0, 1e-3], got {}",
                self.rel_tolerance
            )));
        }
        if self.node_budget < RULE_ORDER {
            return Err(Error::InvalidQuadrature(format!(
                "node budget must be at least {RULE_ORDER}, got {}",
                self.node_budget
            )));
        }
        Ok(())
    }

    /// The truncation point `X` used for `f`.
    pub fn domain_for(&self, f: &ComplexProfile<T>) -> Result<T> {
        self.validate()?;
        let x = match self.half_width {
            HalfWidth::Fixed(x) => x,
            HalfWidth::DecayMultiple(m) => m * f.decay_scale(),
        };
        if !(x > T::zero()) || !x.is_finite() {
            return Err(Error::InvalidQuadrature(format!(
                "profile decay scale {} gives no usable domain",
                f.decay_scale()
            )));
        }
        Ok(x)
    }
}

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: Complex<T>,
    /// Sum of the per-panel bisection error estimates.
    pub error: T,
    /// Estimate of `int |f|`, the scale the tolerance is measured against.
    pub abs_integral: T,
    pub evaluations: usize,
}

struct Rule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    /// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
    fn gauss_legendre(n: usize) -> Self {
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::from_usize_lossy(n);
        for i in 0..n.div_ceil(2) {
            let guess = T::PI() * (T::from_usize_lossy(i + 1) - lit(0.25)) / (nf + lit(0.5));
            let mut x = guess.cos();
            for _ in 0..100 {
                let (p, p_prev) = legendre(n, x);
                let dx = p / (nf * (x * p - p_prev) / (x * x - T::one()));
                x -= dx;
                if dx.abs() <= T::epsilon() {
                    break;
                }
            }
            let (p, p_prev) = legendre(n, x);
            let dp = nf * (x * p - p_prev) / (x * x - T::one());
            let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    fn apply(&self, f: &ComplexProfile<T>, a: T, b: T) -> Result<(Complex<T>, T)> {
        let half = lit::<T>(0.5) * (b - a);
        let mid = lit::<T>(0.5) * (a + b);
        let mut sum = Complex::new(T::zero(), T::zero());
        let mut abs_sum = T::zero();
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let x = mid + half * t;
            let v = f.eval(x);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(x.as_f64()));
            }
            sum = sum + v * w;
            abs_sum += v.norm() * w;
        }
        Ok((sum * half, abs_sum * half))
    }
}

fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let next = ((lit::<T>(2.0) * kf - T::one()) * x * p - (kf - T::one()) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

struct Panel<T> {
    a: T,
    b: T,
    left: (Complex<T>, T),
    right: (Complex<T>, T),
    err: T,
}

impl<T: Real> Panel<T> {
    fn build(rule: &Rule<T>, f: &ComplexProfile<T>, a: T, b: T, whole: Complex<T>) -> Result<Self> {
        let m = lit::<T>(0.5) * (a + b);
        let left = rule.apply(f, a, m)?;
        let right = rule.apply(f, m, b)?;
        let err = (whole - (left.0 + right.0)).norm();
        Ok(Self { a, b, left, right, err })
    }
}

struct Keyed<T>(T, usize);

impl<T: PartialOrd> PartialEq for Keyed<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: PartialOrd> Eq for Keyed<T> {}
impl<T: PartialOrd> PartialOrd for Keyed<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: PartialOrd> Ord for Keyed<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal).then(other.1.cmp(&self.1))
    }
}

/// Adaptive Gauss-Legendre quadrature of `f` over `[-X, X]` with global bisection.
///
/// The tolerance is relative to `int |f|`, so integrals that vanish by symmetry still
/// terminate.
pub fn integrate_with_estimate<T: Real>(
    f: &ComplexProfile<T>,
    spec: &QuadratureSpec<T>,
) -> Result<Quadrature<T>> {
    let x_max = spec.domain_for(f)?;
    let rule = Rule::gauss_legendre(RULE_ORDER);

    let mut cuts = vec![-x_max];
    cuts.extend(f.breakpoints().iter().copied().filter(|&p| p > -x_max && p < x_max));
    cuts.push(x_max);

    let mut panels: Vec<Panel<T>> = Vec::new();
    let mut evaluations = 0usize;
    let total_width = lit::<T>(2.0) * x_max;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let pieces = ((b - a) / total_width * T::from_usize_lossy(INITIAL_PANELS))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = (b - a) / T::from_usize_lossy(pieces);
        for k in 0..pieces {
            let pa = a + h * T::from_usize_lossy(k);
            let pb = if k + 1 == pieces { b } else { pa + h };
            let whole = rule.apply(f, pa, pb)?.0;
            panels.push(Panel::build(&rule, f, pa, pb, whole)?);
            evaluations += 3 * RULE_ORDER;
        }
    }

    let mut heap: BinaryHeap<Keyed<T>> = panels.iter().enumerate().map(|(i, p)| Keyed(p.err, i)).collect();
    let mut alive = vec![true; panels.len()];
    let mut value: Complex<T> = panels.iter().map(|p| p.left.0 + p.right.0).fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
    let mut abs_integral: T = panels.iter().map(|p| p.left.1 + p.right.1).sum();
    let mut error: T = panels.iter().map(|p| p.err).sum();
    let roundoff = lit::<T>(64.0) * T::epsilon();

    loop {
        let target = (spec.rel_tolerance.max(roundoff) * abs_integral).max(spec.abs_tolerance);
        if error <= target {
            break;
        }
        let Some(Keyed(_, idx)) = heap.pop() else { break };
        if !alive[idx] {
            continue;
        }
        if evaluations + 4 * RULE_ORDER > spec.node_budget {
            return Err(Error::NonConvergence {
                estimate: value.norm().as_f64(),
                error: error.as_f64(),
                evaluations,
            });
        }
        let (a, b, left, right, err) = {
            let p = &panels[idx];
            (p.a, p.b, p.left, p.right, p.err)
        };
        let m = lit::<T>(0.5) * (a + b);
        if (b - a) <= roundoff * a.abs().max(b.abs()).max(T::one()) {
            // cannot resolve further; keep its contribution and drop its error
            error -= err;
            alive[idx] = false;
            continue;
        }
        alive[idx] = false;
        let lp = Panel::build(&rule, f, a, m, left.0)?;
        let rp = Panel::build(&rule, f, m, b, right.0)?;
        evaluations += 4 * RULE_ORDER;
        value = value - (left.0 + right.0) + (lp.left.0 + lp.right.0) + (rp.left.0 + rp.right.0);
        abs_integral = abs_integral - (left.1 + right.1) + (lp.left.1 + lp.right.1) + (rp.left.1 + rp.right.1);
        error = error - err + lp.err + rp.err;
        for child in [lp, rp] {
            heap.push(Keyed(child.err, panels.len()));
            panels.push(child);
            alive.push(true);
        }
    }

    // Truncation check at the domain edges.
    let tail = (f.eval(-x_max).norm() + f.eval(x_max).norm()) * x_max;
    if tail > (spec.rel_tolerance * abs_integral).max(spec.abs_tolerance) {
        return Err(Error::DomainTooSmall {
            half_width: x_max.as_f64(),
            tail: tail.as_f64(),
            scale: abs_integral.as_f64(),
        });
    }

    Ok(Quadrature { value, error: error.max(T::zero()), abs_integral, evaluations })
}

/// `int_{-X}^{X} f(x) dx` to the relative tolerance of `spec`.
pub fn integrate<T: Real>(f: &ComplexProfile<T>, spec: &QuadratureSpec<T>) -> Result<Complex<T>> {
    integrate_with_estimate(f, spec).map(|q| q.value)
}

/// `<f|g> = int conj(f) g dx`.
pub fn inner<T: Real>(f: &ComplexProfile<T>, g: &ComplexProfile<T>, spec: &QuadratureSpec<T>) -> Result<Complex<T>> {
    integrate(&f.conj_mul(g), spec)
}

/// [`inner`], relaxing the relative tolerance tenfold at a time up to `cap` while
/// refinement stalls. For integrands built from nearly cancelling combinations, whose
/// rounding noise adaptive refinement cannot remove.
pub fn inner_relaxed<T: Real>(
    f: &ComplexProfile<T>,
    g: &ComplexProfile<T>,
    spec: &QuadratureSpec<T>,
    cap: T,
) -> Result<Complex<T>> {
    let mut local = *spec;
    loop {
        match inner(f, g, &local) {
            Err(Error::NonConvergence { .. }) if local.rel_tolerance < cap => {
                local.rel_tolerance = (local.rel_tolerance * lit(10.0)).min(cap);
            }
            other => return other,
        }
    }
}

/// `int |f|^2 dx`.
pub fn norm_sqr<T: Real>(f: &ComplexProfile<T>, spec: &QuadratureSpec<T>) -> Result<T> {
    integrate(&f.norm_sqr(), spec).map(|v| v.re)
}

/// `f^(k) = int f(x) exp(-i 2 pi k x) dx`.
pub fn fourier_transform<T: Real>(f: &ComplexProfile<T>, k: T, spec: &QuadratureSpec<T>) -> Result<Complex<T>> {
    let g = f.clone();
    let two_pi_k = lit::<T>(2.0) * T::PI() * k;
    let kernel = ComplexProfile::new(f.decay_scale(), move |x| {
        let phase = -two_pi_k * x;
        g.eval(x) * Complex::new(phase.cos(), phase.sin())
    })
    .with_breakpoints(f.breakpoints().to_vec());
    integrate(&kernel, spec)
}

/// Profile whose value at `k` is the quadrature Fourier transform of `f`.
///
/// Evaluation failures surface as NaN, which any later quadrature reports as
/// [`Error::NonFinite`].
pub fn fourier_profile<T: Real>(f: &ComplexProfile<T>, decay_scale: T, spec: &QuadratureSpec<T>) -> ComplexProfile<T> {
    let f = f.clone();
    let spec = *spec;
    ComplexProfile::new(decay_scale, move |k| {
        fourier_transform(&f, k, &spec).unwrap_or_else(|_| Complex::new(T::nan(), T::nan()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = Rule::<f64>::gauss_legendre(RULE_ORDER);
        let sum_w: f64 = rule.weights.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // degree 30 monomial: int_{-1}^{1} x^30 = 2/31
        let m: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn rect_without_breakpoints_converges() {
        let f = ComplexProfile::real(1.0, |x: f64| if x.abs() <= 1.0 { 1.0 } else { 0.0 });
        let v = integrate(&f, &QuadratureSpec::with_half_width(3.0)).unwrap();
        assert!((v.re - 2.0).abs() < 1e-9, "{}", v.re);
    }

    #[test]
    fn gaussian_integral() {
        let f = ComplexProfile::real(1.0, |x: f64| (-x * x).exp());
        let v = integrate(&f, &QuadratureSpec::default()).unwrap();
        assert!((v.re - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn squared_gaussian_aperture() {
        // exp(-8 pi^2 x^2) integrates to 1/sqrt(8 pi)
        let f = ComplexProfile::real(1.0 / (2.0 * PI), |x: f64| (-8.0 * PI * PI * x * x).exp());
        let v = integrate(&f, &QuadratureSpec::default()).unwrap();
        let exact = 1.0 / (8.0 * PI).sqrt();
        assert!((v.re - exact).abs() < 1e-10 * exact);
        assert!((exact - 0.1994711).abs() < 1e-7);
    }

    #[test]
    fn odd_integrand_terminates_near_zero() {
        let f = ComplexProfile::real(1.0, |x: f64| x * (-x * x).exp());
        let v = integrate(&f, &QuadratureSpec::default()).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn truncated_tail_is_reported() {
        let f = ComplexProfile::real(1.0, |x: f64| 1.0 / (1.0 + x * x));
        let err = integrate(&f, &QuadratureSpec::with_half_width(5.0)).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall { .. }));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = ComplexProfile::real(1.0, |x: f64| (200.0 * x).sin().abs());
        let spec = QuadratureSpec { node_budget: 200, ..QuadratureSpec::with_half_width(1.0) };
        assert!(matches!(integrate(&f, &spec), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn invalid_specs_rejected() {
        let spec = QuadratureSpec::<f64>::default().with_tolerance(1e-2);
        assert!(spec.validate().is_err());
        let spec = QuadratureSpec::<f64> { node_budget: 4, ..Default::default() };
        assert!(spec.validate().is_err());
        assert!(QuadratureSpec::<f64>::with_half_width(-1.0).validate().is_err());
    }

    #[test]
    fn self_reciprocal_gaussian() {
        let f = ComplexProfile::real(1.0, |x: f64| (-PI * x * x).exp());
        let v = fourier_transform(&f, 0.5, &QuadratureSpec::default()).unwrap();
        assert!((v.re - (-PI * 0.25).exp()).abs() < 1e-12);
        assert!((v.re - 0.4559381).abs() < 1e-7);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn rect_transform_has_sinc_zero() {
        let f = ComplexProfile::real(0.5, |x: f64| crate::real::rect(x)).with_breakpoints(vec![-0.5, 0.5]);
        let v = fourier_transform(&f, 1.0, &QuadratureSpec::default()).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn shifted_rect_transform_matches_analytic() {
        let (delta, s) = (0.3, 1.4);
        let f = ComplexProfile::real(s, move |x: f64| crate::real::rect((x - s / 2.0) / delta))
            .with_breakpoints(vec![s / 2.0 - delta / 2.0, s / 2.0 + delta / 2.0]);
        for &k in &[0.0, 0.37, 1.1, -2.5, 4.2] {
            let v = fourier_transform(&f, k, &QuadratureSpec::default()).unwrap();
            let mag = delta * crate::real::sinc_n(k * delta);
            let expected = Complex::new(0.0, -PI * k * s).exp() * mag;
            assert!((v - expected).norm() < 1e-12, "k = {k}: {v} vs {expected}");
        }
    }

    #[test]
    fn single_precision_runs() {
        let f = ComplexProfile::real(1.0f32, |x: f32| (-x * x).exp());
        let v = integrate(&f, &QuadratureSpec::default()).unwrap();
        assert!((v.re - std::f32::consts::PI.sqrt()).abs() < 1e-5);
    }
}
