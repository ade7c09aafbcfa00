//! Classical Fisher information of concrete measurements: Hermite-Gauss mode sorting
//! (SPADE) and direct intensity imaging.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{integrate, ComplexProfile, QuadratureSpec};
use crate::optics::{check_coherence, cpsf, cpsf_derivative, Aperture, ApertureKind, Convention, SourcePair};
use crate::real::{lit, Real};

/// Largest tail mass a truncated mode distribution may drop.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Outcome probabilities per emitted photon, with the no-detection outcome kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution<T> {
    pub probs: Vec<T>,
    pub dprobs: Vec<T>,
    /// `1 - sum probs`: the photon was lost or never reached a sorted mode.
    pub remainder: T,
    pub dremainder: T,
    pub q_max: usize,
    /// Probability mass beyond `q_max`, relative to the detected mass.
    pub tail_mass: T,
}

impl<T: Real> OutcomeDistribution<T> {
    /// Completes `probs` with the remainder outcome.
    pub fn from_outcomes(probs: Vec<T>, dprobs: Vec<T>) -> Result<Self> {
        if probs.len() != dprobs.len() {
            return Err(Error::InvalidArgument(format!("{} probabilities but {} derivatives", probs.len(), dprobs.len())));
        }
        if probs.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::InvalidArgument("negative outcome probability".into()));
        }
        let total: T = probs.iter().copied().sum();
        if total > T::one() + lit(1e-12) {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        let dtotal: T = dprobs.iter().copied().sum();
        let q_max = probs.len().saturating_sub(1);
        Ok(Self { probs, dprobs, remainder: (T::one() - total).max(T::zero()), dremainder: -dtotal, q_max, tail_mass: T::zero() })
    }

    pub fn detected(&self) -> T {
        self.probs.iter().copied().sum()
    }
}

/// `sum_q (dP_q/ds)^2 / P_q` over outcomes with `P_q > 1e-300`, remainder included.
pub fn classical_fi<T: Real>(dist: &OutcomeDistribution<T>) -> T {
    let floor = T::min_positive_value().max(lit(1e-300));
    let term = |p: T, dp: T| if p > floor { dp * dp / p } else { T::zero() };
    dist.probs.iter().zip(dist.dprobs.iter()).map(|(&p, &dp)| term(p, dp)).sum::<T>() + term(dist.remainder, dist.dremainder)
}

/// Hermite-Gauss mode `q` matched to a PSF whose intensity has standard deviation `sigma`.
pub fn hermite_gauss_mode<T: Real>(q: usize, sigma: T) -> ComplexProfile<T> {
    let scale = sigma * (T::one() + T::from_usize_lossy(q).sqrt());
    ComplexProfile::real(scale, move |x| hermite_function(q, x / (lit::<T>(2.0).sqrt() * sigma)) / (lit::<T>(2.0).sqrt() * sigma).sqrt())
}

/// Normalized Hermite function `h_q(t)` by upward recurrence.
fn hermite_function<T: Real>(q: usize, t: T) -> T {
    let mut prev = T::zero();
    let mut cur = (-t * t / lit(2.0)).exp() / T::PI().powf(lit(0.25));
    for n in 0..q {
        let nf = T::from_usize_lossy(n);
        let next = (lit::<T>(2.0) / (nf + T::one())).sqrt() * t * cur - (nf / (nf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Smallest `q_max >= floor` whose Poisson tail beyond it is below [`TAIL_LIMIT`].
pub fn required_q_max<T: Real>(separation: T, sigma: T, floor: usize) -> usize {
    let mean = separation * separation / (lit::<T>(16.0) * sigma * sigma);
    let mut q = floor;
    while poisson_tail(mean, q) >= lit(TAIL_LIMIT) {
        q += 1;
    }
    q
}

/// `P(N > q_max)` for `N ~ Poisson(mean)`, summed upward from the first omitted term.
fn poisson_tail<T: Real>(mean: T, q_max: usize) -> T {
    if mean == T::zero() {
        return T::zero();
    }
    let mut log_term = -mean;
    for k in 1..=q_max + 1 {
        log_term += mean.ln() - T::from_usize_lossy(k).ln();
    }
    let mut term = log_term.exp();
    let mut sum = T::zero();
    let mut k = q_max + 1;
    while term > sum * T::epsilon() && k < q_max + 10_000 {
        sum += term;
        k += 1;
        term = term * mean / T::from_usize_lossy(k);
    }
    sum
}

/// SPADE outcome distribution per emitted photon for point sources behind a Gaussian
/// aperture, with modes matched to the PSF width.
///
/// The image-plane branches `u(x - s/2) e^{-i phi/2} +/- u(x + s/2) e^{i phi/2}` project
/// onto even (odd) modes only, so the cross terms carrying `Im gamma` drop out and
/// `P_q = kappa w_q e^{-Q} Q^q / q!` with `Q = s^2 / (16 sigma^2)`.
pub fn spade_distribution<T: Real>(
    ap: &Aperture<T>,
    src: &SourcePair<T>,
    q_max: usize,
    convention: Convention,
) -> Result<OutcomeDistribution<T>> {
    let sigma = match ap.kind() {
        ApertureKind::Gaussian { sigma } => *sigma,
        _ => return Err(Error::ApertureNotGaussian(ap.id())),
    };
    if q_max < 10 {
        return Err(Error::InvalidArgument(format!("q_max must be at least 10, got {q_max}")));
    }
    check_coherence(src.coherence)?;
    let s = src.separation;
    let mean = s * s / (lit::<T>(16.0) * sigma * sigma);
    let tail = poisson_tail(mean, q_max);
    if tail >= lit(TAIL_LIMIT) {
        return Err(Error::TailTooHeavy { q_max, tail: tail.as_f64() });
    }
    let two = lit::<T>(2.0);
    let intensity = T::one() / (sigma * (lit::<T>(8.0) * T::PI()).sqrt());
    let kappa = two * src.width * convention.factor::<T>() * intensity;
    let w = [(T::one() + src.coherence.re) / two, (T::one() - src.coherence.re) / two];
    let dmean = s / (lit::<T>(8.0) * sigma * sigma);

    let mut probs = Vec::with_capacity(q_max + 1);
    let mut dprobs = Vec::with_capacity(q_max + 1);
    // poisson(q) = e^{-Q} Q^q / q!, d/dQ poisson(q) = poisson(q) (q - Q) / Q
    let mut poisson = (-mean).exp();
    let mut below = T::zero(); // e^{-Q} Q^{q-1} / q!, finite at Q = 0
    for q in 0..=q_max {
        let qf = T::from_usize_lossy(q);
        if q > 0 {
            below = poisson / qf;
            poisson = poisson * mean / qf;
        }
        let dpoisson = if q == 0 { -poisson } else { qf * below - poisson };
        let wq = w[q % 2];
        probs.push(kappa * wq * poisson);
        dprobs.push(kappa * wq * dpoisson * dmean);
    }
    let mut dist = OutcomeDistribution::from_outcomes(probs, dprobs)?;
    dist.tail_mass = tail;
    Ok(dist)
}

/// Fisher information per emitted photon of the continuous image-plane intensity record
/// for point sources, with the no-detection outcome included.
pub fn direct_imaging_fi<T: Real>(
    ap: &Aperture<T>,
    src: &SourcePair<T>,
    convention: Convention,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    check_coherence(src.coherence)?;
    let u = cpsf(ap, spec)?;
    let du = cpsf_derivative(ap, spec)?;
    let half = lit::<T>(0.5);
    let a = half * src.separation;
    let c = half * src.width * convention.factor::<T>();
    let gamma = src.coherence;
    let parts = move |x: T| {
        let (u1, u2) = (u.eval(x - a), u.eval(x + a));
        let (d1, d2) = (du.eval(x - a) * (-half), du.eval(x + a) * half);
        let two = lit::<T>(2.0);
        let i = c * (u1.norm_sqr() + u2.norm_sqr() + two * (gamma * u1 * u2.conj()).re);
        let di = c * two * ((u1.conj() * d1).re + (u2.conj() * d2).re + (gamma * (d1 * u2.conj() + u1 * d2.conj())).re);
        (i, di)
    };
    let decay = cpsf_decay(ap) + a;
    let p1 = parts.clone();
    let density = ComplexProfile::real(decay, move |x| {
        let (i, di) = p1(x);
        if i > T::zero() {
            di * di / i
        } else {
            T::zero()
        }
    });
    let p2 = parts;
    let detected = ComplexProfile::new(decay, move |x| {
        let (i, di) = p2(x);
        Complex::new(i, di)
    });
    let fi = integrate(&density, spec)?.re;
    let totals = integrate(&detected, spec)?;
    let (p, dp) = (totals.re, totals.im);
    let lost = T::one() - p;
    Ok(if lost > T::zero() { fi + dp * dp / lost } else { fi })
}

fn cpsf_decay<T: Real>(ap: &Aperture<T>) -> T {
    match ap.kind() {
        ApertureKind::Gaussian { sigma } => lit::<T>(2.0) * *sigma,
        ApertureKind::GaussianMixture { components } => lit::<T>(2.0) * components.iter().map(|c| c.1).fold(T::zero(), T::max),
        _ => T::one() / ap.profile().decay_scale(),
    }
}
