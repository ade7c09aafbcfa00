use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::real::Real;

type Evaluator<T> = Arc<dyn Fn(T) -> Complex<T> + Send + Sync>;

/// A complex amplitude defined on the real line.
///
/// `decay_scale` is the coordinate beyond which the profile has started to vanish; the
/// default quadrature domain is a fixed multiple of it. `breakpoints` lists coordinates
/// where the profile (or a derivative) is discontinuous, so quadrature can split there.
#[derive(Clone)]
pub struct ComplexProfile<T> {
    eval: Evaluator<T>,
    decay_scale: T,
    breakpoints: Arc<Vec<T>>,
}

impl<T: Real> ComplexProfile<T> {
    pub fn new(decay_scale: T, f: impl Fn(T) -> Complex<T> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), decay_scale, breakpoints: Arc::new(Vec::new()) }
    }

    pub fn real(decay_scale: T, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self::new(decay_scale, move |x| Complex::new(f(x), T::zero()))
    }

    pub fn zero() -> Self {
        Self::new(T::one(), |_| Complex::new(T::zero(), T::zero()))
    }

    pub fn with_breakpoints(mut self, mut points: Vec<T>) -> Self {
        points.extend(self.breakpoints.iter().copied());
        points.retain(|p| p.is_finite());
        points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        points.dedup();
        self.breakpoints = Arc::new(points);
        self
    }

    #[inline]
    pub fn eval(&self, x: T) -> Complex<T> {
        (self.eval)(x)
    }

    pub fn decay_scale(&self) -> T {
        self.decay_scale
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Pointwise product. Decays at least as fast as the faster factor.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(self.decay_scale.min(other.decay_scale), move |x| a(x) * b(x))
            .with_breakpoints(self.merged_breakpoints(other))
    }

    /// `conj(self) * other`, the integrand of `<self|other>`.
    pub fn conj_mul(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(self.decay_scale.min(other.decay_scale), move |x| a(x).conj() * b(x))
            .with_breakpoints(self.merged_breakpoints(other))
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        let a = self.eval.clone();
        Self::new(self.decay_scale, move |x| a(x) * c).with_breakpoints(self.breakpoints.to_vec())
    }

    /// Linear combination `sum_i c_i f_i`.
    pub fn combine(terms: &[(Complex<T>, &Self)]) -> Self {
        let parts: Vec<(Complex<T>, Evaluator<T>)> =
            terms.iter().map(|(c, f)| (*c, f.eval.clone())).collect();
        let decay = terms.iter().map(|(_, f)| f.decay_scale).fold(T::zero(), T::max);
        let bps = terms.iter().flat_map(|(_, f)| f.breakpoints.iter().copied()).collect();
        Self::new(decay, move |x| {
            parts.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (c, f)| acc + *c * f(x))
        })
        .with_breakpoints(bps)
    }

    pub fn add(&self, other: &Self) -> Self {
        let one = Complex::new(T::one(), T::zero());
        Self::combine(&[(one, self), (one, other)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        let one = Complex::new(T::one(), T::zero());
        Self::combine(&[(one, self), (-one, other)])
    }

    /// `x -> |f(x)|^2` as a real-valued profile.
    pub fn norm_sqr(&self) -> Self {
        let a = self.eval.clone();
        Self::real(self.decay_scale, move |x| a(x).norm_sqr()).with_breakpoints(self.breakpoints.to_vec())
    }

    /// `x -> f(x - shift)`.
    pub fn shifted(&self, shift: T) -> Self {
        let a = self.eval.clone();
        let bps = self.breakpoints.iter().map(|&p| p + shift).collect();
        Self::new(self.decay_scale + shift.abs(), move |x| a(x - shift)).with_breakpoints(bps)
    }

    /// `x -> f(-x)`.
    pub fn reflected(&self) -> Self {
        let a = self.eval.clone();
        let bps = self.breakpoints.iter().map(|&p| -p).collect();
        Self::new(self.decay_scale, move |x| a(-x)).with_breakpoints(bps)
    }

    pub fn with_decay_scale(mut self, decay_scale: T) -> Self {
        self.decay_scale = decay_scale;
        self
    }

    fn merged_breakpoints(&self, other: &Self) -> Vec<T> {
        self.breakpoints.iter().chain(other.breakpoints.iter()).copied().collect()
    }
}

impl<T: fmt::Debug> fmt::Debug for ComplexProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexProfile")
            .field("decay_scale", &self.decay_scale)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}
