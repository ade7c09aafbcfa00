//! Unnormalized branch vectors, the coefficient matrix and the two-source state.
//!
//! The state is carried as `(psi_0, psi_pi, B, p3)` and never as a dense density matrix:
//! `rho = sum_ij B_ij |psi_i><psi_j| + p3 |0><0|`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{inner, inner_relaxed, ComplexProfile, QuadratureSpec};
use crate::optics::{check_coherence, Aperture, Convention, SourcePair};
use crate::real::{lit, sinc_n, Real};

/// `psi~_phi(x) = A(x) sinc_n(x delta) cos(pi x s + phi / 2)` and its `s`-derivative.
///
/// In point-source mode the sinc factor is dropped.
#[derive(Clone, Debug)]
pub struct UnnormalizedState<T> {
    aperture: Aperture<T>,
    amplitude: ComplexProfile<T>,
    derivative: ComplexProfile<T>,
    pub phase: T,
    pub separation: T,
    pub width: T,
    pub point_source_mode: bool,
}

pub fn build_unnormalized_state<T: Real>(
    ap: &Aperture<T>,
    s: T,
    phase: T,
    delta: T,
    point_source_mode: bool,
) -> Result<UnnormalizedState<T>> {
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(Error::InvalidSource(format!("separation must be non-negative, got {s}")));
    }
    if !(delta >= T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidSource(format!("width must be non-negative, got {delta}")));
    }
    if delta == T::zero() && !point_source_mode {
        return Err(Error::InvalidSource("zero width requires point-source mode".into()));
    }
    let (amplitude, derivative) = branch_profiles(ap, s, phase, if point_source_mode { T::zero() } else { delta });
    Ok(UnnormalizedState {
        aperture: ap.clone(),
        amplitude,
        derivative,
        phase,
        separation: s,
        width: delta,
        point_source_mode,
    })
}

/// `psi~` and `d psi~ / ds` for any real `s`; `width = 0` drops the sinc factor.
fn branch_profiles<T: Real>(ap: &Aperture<T>, s: T, phase: T, width: T) -> (ComplexProfile<T>, ComplexProfile<T>) {
    let pi = T::PI();
    // cos(theta + phi/2) = cos(theta) ch - sin(theta) sh; exact zeros keep the parity exact
    let snap = |v: T| if v.abs() < lit::<T>(4.0) * T::epsilon() { T::zero() } else { v };
    let (ch, sh) = (snap((lit::<T>(0.5) * phase).cos()), snap((lit::<T>(0.5) * phase).sin()));

    let a = ap.profile().clone();
    let amplitude = ComplexProfile::new(a.decay_scale(), move |x| {
        let (sn, cs) = (pi * x * s).sin_cos();
        a.eval(x) * (sinc_n(x * width) * (cs * ch - sn * sh))
    })
    .with_breakpoints(ap.profile().breakpoints().to_vec());

    let a = ap.profile().clone();
    let derivative = ComplexProfile::new(a.decay_scale(), move |x| {
        let (sn, cs) = (pi * x * s).sin_cos();
        a.eval(x) * (-pi * x * sinc_n(x * width) * (sn * ch + cs * sh))
    })
    .with_breakpoints(ap.profile().breakpoints().to_vec());
    (amplitude, derivative)
}

impl<T: Real> UnnormalizedState<T> {
    pub fn amplitude(&self) -> &ComplexProfile<T> {
        &self.amplitude
    }

    /// Analytic `d psi~ / ds`.
    pub fn derivative(&self) -> &ComplexProfile<T> {
        &self.derivative
    }

    pub fn aperture(&self) -> &Aperture<T> {
        &self.aperture
    }

    /// The same branch at another separation.
    pub fn at_separation(&self, s: T) -> Result<Self> {
        build_unnormalized_state(&self.aperture, s, self.phase, self.width, self.point_source_mode)
    }

    /// The amplitude profile at another separation, which may be negative. Used by
    /// finite-difference checks that straddle `s = 0`.
    pub fn amplitude_at(&self, s: T) -> ComplexProfile<T> {
        let width = if self.point_source_mode { T::zero() } else { self.width };
        branch_profiles(&self.aperture, s, self.phase, width).0
    }

    /// `n(phi, s) = <psi~|psi~>`.
    pub fn norm_sqr(&self, spec: &QuadratureSpec<T>) -> Result<T> {
        crate::numerics::norm_sqr(&self.amplitude, spec)
    }
}

/// `chi = arccos(Re gamma)` in `[0, pi]`.
pub fn coherence_angle<T: Real>(gamma: Complex<T>) -> Result<T> {
    check_coherence(gamma)?;
    Ok(gamma.re.max(-T::one()).min(T::one()).acos())
}

/// `B = scale [[1 + Re g, Im g], [Im g, 1 - Re g]]` with `scale = delta p_em / pi`
/// (paper convention) or `delta p_em` (physical convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrix<T> {
    pub entries: [[T; 2]; 2],
    pub scale: T,
}

impl<T: Real> CoefficientMatrix<T> {
    pub fn new(gamma: Complex<T>, delta: T, emission_prob: T, convention: Convention) -> Result<Self> {
        check_coherence(gamma)?;
        let scale = delta * emission_prob * convention.factor::<T>();
        Ok(Self::with_scale(gamma, scale))
    }

    pub fn with_scale(gamma: Complex<T>, scale: T) -> Self {
        let one = T::one();
        Self {
            entries: [
                [scale * (one + gamma.re), scale * gamma.im],
                [scale * gamma.im, scale * (one - gamma.re)],
            ],
            scale,
        }
    }

    pub fn trace(&self) -> T {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn determinant(&self) -> T {
        self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0]
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        let tol = lit::<T>(1e-12) * self.scale * self.scale;
        self.entries[0][0] >= T::zero() && self.entries[1][1] >= T::zero() && self.determinant() >= -tol
    }
}

/// Inner products among `{psi~_0, psi~_pi, d psi~_0, d psi~_pi}`, in that order, plus
/// the branch Gram determinants `G_i = n_i d_i - c_i^2` evaluated without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTable<T> {
    /// `gram[a][b] = <v_a|v_b>`.
    pub gram: [[Complex<T>; 4]; 4],
    pub g0: T,
    pub g_pi: T,
}

impl<T: Real> BranchTable<T> {
    pub fn compute(psi0: &UnnormalizedState<T>, psi_pi: &UnnormalizedState<T>, spec: &QuadratureSpec<T>) -> Result<Self> {
        let vs = [psi0.amplitude(), psi_pi.amplitude(), psi0.derivative(), psi_pi.derivative()];
        let zero = Complex::new(T::zero(), T::zero());
        let mut gram = [[zero; 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                let v = inner(vs[a], vs[b], spec)?;
                gram[a][b] = v;
                gram[b][a] = v.conj();
            }
        }
        let g0 = branch_gram(psi0, gram[0][0].re, gram[2][0].re, spec)?;
        let g_pi = branch_gram(psi_pi, gram[1][1].re, gram[3][1].re, spec)?;
        Ok(Self { gram, g0, g_pi })
    }

    pub fn n0(&self) -> T {
        self.gram[0][0].re
    }
    pub fn n_pi(&self) -> T {
        self.gram[1][1].re
    }
    /// `Re <d psi~_0|psi~_0>`, half the derivative of `n0`.
    pub fn c0(&self) -> T {
        self.gram[2][0].re
    }
    pub fn c_pi(&self) -> T {
        self.gram[3][1].re
    }
    pub fn d0(&self) -> T {
        self.gram[2][2].re
    }
    pub fn d_pi(&self) -> T {
        self.gram[3][3].re
    }

    /// Deviations from the lemma relations: `<psi0|psi_pi>`, `<dpsi0|psi_pi>`,
    /// `<psi0|dpsi_pi>`, `<dpsi0|dpsi_pi>` and the imaginary parts of `<dpsi_i|psi_i>`.
    pub fn orthogonality_defects(&self) -> [T; 6] {
        let g = &self.gram;
        [g[0][1].norm(), g[2][1].norm(), g[0][3].norm(), g[2][3].norm(), g[2][0].im.abs(), g[3][1].im.abs()]
    }
}

/// `n ||d psi - (c / n) psi||^2`, which equals `n d - c^2` but keeps its digits when
/// the two vectors are nearly parallel. The residual then carries rounding noise, so
/// the tolerance may relax to `1e-6`.
fn branch_gram<T: Real>(state: &UnnormalizedState<T>, n: T, c: T, spec: &QuadratureSpec<T>) -> Result<T> {
    if n <= T::zero() {
        return Ok(T::zero());
    }
    let one = Complex::new(T::one(), T::zero());
    let residual = ComplexProfile::combine(&[(one, state.derivative()), (Complex::new(-c / n, T::zero()), state.amplitude())]);
    let r = inner_relaxed(&residual, &residual, spec, lit(1e-6))?.re;
    Ok(n * r)
}

/// The two-source state `rho_p` with its cached branch inner products.
#[derive(Debug, Clone)]
pub struct TwoSourceState<T> {
    pub psi0: UnnormalizedState<T>,
    pub psi_pi: UnnormalizedState<T>,
    pub coeffs: CoefficientMatrix<T>,
    pub p1: T,
    pub p2: T,
    pub p3: T,
    pub chi: T,
    pub source: SourcePair<T>,
    pub convention: Convention,
    pub table: BranchTable<T>,
}

pub fn assemble_state<T: Real>(ap: &Aperture<T>, src: &SourcePair<T>, spec: &QuadratureSpec<T>) -> Result<TwoSourceState<T>> {
    assemble_state_in(ap, src, Convention::Paper, false, spec)
}

/// Builds `rho_p` under `convention`, optionally with the sinc factor dropped.
pub fn assemble_state_in<T: Real>(
    ap: &Aperture<T>,
    src: &SourcePair<T>,
    convention: Convention,
    point_source_mode: bool,
    spec: &QuadratureSpec<T>,
) -> Result<TwoSourceState<T>> {
    check_coherence(src.coherence)?;
    src.validate()?;
    let s = src.separation;
    let psi0 = build_unnormalized_state(ap, s, T::zero(), src.width, point_source_mode)?;
    let psi_pi = build_unnormalized_state(ap, s, T::PI(), src.width, point_source_mode)?;
    let table = BranchTable::compute(&psi0, &psi_pi, spec)?;
    let coeffs = CoefficientMatrix::new(src.coherence, src.width, src.emission_prob, convention)?;

    // p(phi, s) = 2 delta factor n(phi, s), n(phi, s) = cos^2(phi/2) n0 + sin^2(phi/2) n_pi
    // at r = 0 the phase is arbitrary; pi/2 splits the mixture symmetrically
    let r = src.coherence.norm();
    let phi = if r > T::zero() { src.coherence.arg() } else { lit::<T>(0.5) * T::PI() };
    let half = lit::<T>(0.5);
    let p_of = |angle: T| {
        let (c, sn) = ((half * angle).cos(), (half * angle).sin());
        lit::<T>(2.0) * src.width * convention.factor::<T>() * (c * c * table.n0() + sn * sn * table.n_pi())
    };
    let p1 = src.emission_prob * p_of(phi) * half * (T::one() + r);
    let p2 = src.emission_prob * p_of(phi + T::PI()) * half * (T::one() - r);
    let p3 = T::one() - p1 - p2;
    Ok(TwoSourceState {
        psi0,
        psi_pi,
        coeffs,
        p1,
        p2,
        p3,
        chi: coherence_angle(src.coherence)?,
        source: *src,
        convention,
        table,
    })
}

impl<T: Real> TwoSourceState<T> {
    /// `p(chi, s)`, the transmission probability for the given coherence.
    pub fn transmission(&self) -> T {
        (self.p1 + self.p2) / self.source.emission_prob
    }

    /// Coefficients of the normalized single-photon part, `B / (p1 + p2)`, acting on the
    /// same unnormalized branch vectors.
    pub fn single_photon_part(&self) -> Result<CoefficientMatrix<T>> {
        let total = self.p1 + self.p2;
        if !(total > T::zero()) {
            return Err(Error::DegenerateSource(total.as_f64()));
        }
        Ok(CoefficientMatrix::with_scale(self.source.coherence, self.coeffs.scale / total))
    }

    /// `Tr rho`, which must equal one.
    pub fn trace(&self) -> T {
        let b = &self.coeffs.entries;
        let g = &self.table.gram;
        b[0][0] * g[0][0].re + b[1][1] * g[1][1].re + lit::<T>(2.0) * b[0][1] * g[0][1].re + self.p3
    }
}
