use num_complex::Complex;

use super::report::{QfiParams, QfiReport};
use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;
use crate::optics::{check_coherence, Aperture, Convention, SourcePair};
use crate::real::{lit, Real};
use crate::state::{assemble_state_in, build_unnormalized_state, BranchTable};

/// Real moments of the two branches: norms `n_i`, `c_i = Re <d psi_i|psi_i>`,
/// `d_i = <d psi_i|d psi_i>` and Gram determinants `g_i = n_i d_i - c_i^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMoments<T> {
    pub n0: T,
    pub n_pi: T,
    pub c0: T,
    pub c_pi: T,
    pub d0: T,
    pub d_pi: T,
    pub g0: T,
    pub g_pi: T,
}

/// Moments of the `chi` branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedMoments<T> {
    pub n: T,
    pub c: T,
    pub d: T,
    pub g: T,
}

impl<T: Real> BranchMoments<T> {
    pub fn from_table(t: &BranchTable<T>) -> Self {
        Self {
            n0: t.n0(),
            n_pi: t.n_pi(),
            c0: t.c0(),
            c_pi: t.c_pi(),
            d0: t.d0(),
            d_pi: t.d_pi(),
            g0: t.g0,
            g_pi: t.g_pi,
        }
    }

    /// Moments of `psi~_chi = sqrt(w0) psi~_0 + sqrt(w_pi) psi~_pi`, `w = (1 +- Re gamma) / 2`.
    pub fn mix(&self, re_gamma: T) -> MixedMoments<T> {
        let half = lit::<T>(0.5);
        let w0 = half * (T::one() + re_gamma);
        let wp = half * (T::one() - re_gamma);
        let cross = self.d0 * self.n_pi + self.d_pi * self.n0 - lit::<T>(2.0) * self.c0 * self.c_pi;
        MixedMoments {
            n: w0 * self.n0 + wp * self.n_pi,
            c: w0 * self.c0 + wp * self.c_pi,
            d: w0 * self.d0 + wp * self.d_pi,
            g: w0 * w0 * self.g0 + wp * wp * self.g_pi + w0 * wp * cross.max(T::zero()),
        }
    }
}

/// Moments of both branches at separation `s`; `width = 0` drops the sinc factor.
pub fn branch_moments<T: Real>(ap: &Aperture<T>, s: T, width: T, spec: &QuadratureSpec<T>) -> Result<(BranchMoments<T>, BranchTable<T>)> {
    let point = width == T::zero();
    let psi0 = build_unnormalized_state(ap, s, T::zero(), width, point)?;
    let psi_pi = build_unnormalized_state(ap, s, T::PI(), width, point)?;
    let table = BranchTable::compute(&psi0, &psi_pi, spec)?;
    check_relations(&table)?;
    Ok((BranchMoments::from_table(&table), table))
}

fn check_relations<T: Real>(t: &BranchTable<T>) -> Result<()> {
    let sq = |v: T| v.max(T::zero()).sqrt();
    let (a0, ap, b0, bp) = (sq(t.n0()), sq(t.n_pi()), sq(t.d0()), sq(t.d_pi()));
    let names = [
        ("<psi_0|psi_pi>", a0 * ap),
        ("<d psi_0|psi_pi>", b0 * ap),
        ("<psi_0|d psi_pi>", a0 * bp),
        ("<d psi_0|d psi_pi>", b0 * bp),
        ("Im <d psi_0|psi_0>", a0 * b0),
        ("Im <d psi_pi|psi_pi>", ap * bp),
    ];
    let tol = lit::<T>(1e-8);
    let violations: Vec<String> = t
        .orthogonality_defects()
        .iter()
        .zip(names)
        .filter(|(d, (_, scale))| **d > tol * *scale)
        .map(|(d, (name, scale))| format!("{name} = {:e} (scale {:e})", d.as_f64(), scale.as_f64()))
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::AssumptionViolation(violations))
    }
}

fn report_from_moments<T: Real>(m: &BranchMoments<T>, gamma: Complex<T>, params: QfiParams<T>) -> Result<QfiReport<T>> {
    let mixed = m.mix(gamma.re);
    let k = params.convention.factor::<T>();
    let (two, four) = (lit::<T>(2.0), lit::<T>(4.0));
    let transmission = two * k * mixed.n;
    let mut report = QfiReport {
        f_em_full: four * two * k * mixed.d,
        f_det_full: four * mixed.d / mixed.n,
        f_em_single: four * two * k * mixed.g / mixed.n,
        f_det_single: four * mixed.g / (mixed.n * mixed.n),
        transmission,
        transmission_slope: two * k * two * mixed.c,
        params,
    };
    if !(mixed.n > T::zero()) {
        report.f_det_full = T::infinity();
        report.f_em_single = T::zero();
        report.f_det_single = T::zero();
        return Err(Error::DivergentPerDetected {
            s: report.params.separation.as_f64(),
            re_gamma: gamma.re.as_f64(),
            partial: Box::new(report.to_f64()),
        });
    }
    Ok(report)
}

/// The four QFI values in the point-source limit, through the lemma, for any even
/// aperture. Per-emitted values are per unit `delta`, paper convention.
pub fn qfi_point_sources<T: Real>(ap: &Aperture<T>, s: T, gamma: Complex<T>, spec: &QuadratureSpec<T>) -> Result<QfiReport<T>> {
    check_coherence(gamma)?;
    let (m, _) = branch_moments(ap, s, T::zero(), spec)?;
    let params = QfiParams {
        aperture: ap.id(),
        sigma: ap.psf_sigma(),
        separation: s,
        coherence: gamma,
        convention: Convention::Paper,
    };
    report_from_moments(&m, gamma, params)
}

/// QFI of `rho_p` at a finite source width, split into its photon and vacuum parts.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteWidthQfi<T> {
    /// `F[rho_p]`.
    pub total: T,
    /// `4 sum_i B_ii <d psi_i|d psi_i>`.
    pub photon: T,
    /// `(dp3/ds)^2 / p3`.
    pub vacuum: T,
    /// `p1 + p2`.
    pub detected_probability: T,
    /// `F[rho_p^(1)]`.
    pub single_photon: T,
    /// Per-unit-width report built from the finite-width branches.
    pub report: QfiReport<T>,
}

pub fn qfi_finite_width<T: Real>(
    ap: &Aperture<T>,
    src: &SourcePair<T>,
    convention: Convention,
    spec: &QuadratureSpec<T>,
) -> Result<FiniteWidthQfi<T>> {
    let state = assemble_state_in(ap, src, convention, false, spec)?;
    check_relations(&state.table)?;
    let m = BranchMoments::from_table(&state.table);
    let b = &state.coeffs.entries;
    let four = lit::<T>(4.0);
    let photon = four * (b[0][0] * m.d0 + b[1][1] * m.d_pi);
    let dp3 = -lit::<T>(2.0) * (b[0][0] * m.c0 + b[1][1] * m.c_pi);
    let vacuum = if state.p3 > T::zero() { dp3 * dp3 / state.p3 } else { T::zero() };
    let params = QfiParams {
        aperture: ap.id(),
        sigma: ap.psf_sigma(),
        separation: src.separation,
        coherence: src.coherence,
        convention,
    };
    let mixed = m.mix(src.coherence.re);
    let report = report_from_moments(&m, src.coherence, params)?;
    Ok(FiniteWidthQfi {
        total: photon + vacuum,
        photon,
        vacuum,
        detected_probability: state.p1 + state.p2,
        single_photon: four * mixed.g / (mixed.n * mixed.n),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::gaussian_closed_forms;

    #[test]
    fn gaussian_lemma_path_matches_closed_forms() {
        let spec = QuadratureSpec::<f64>::default();
        let ap = Aperture::<f64>::gaussian(1.0).unwrap();
        for s in [0.01, 0.5, 2.0, 5.0] {
            for r in [-1.0, -0.98, 0.0, 1.0] {
                let a = qfi_point_sources(&ap, s, Complex::new(r, 0.0), &spec).unwrap();
                let b = gaussian_closed_forms(1.0, s, r).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() <= 1e-6 * y.abs(), "s={s} r={r}: {x} vs {y}");
                }
                assert!((a.transmission - b.transmission).abs() < 1e-10 * b.transmission);
            }
        }
    }

    #[test]
    fn imaginary_part_is_irrelevant() {
        let spec = QuadratureSpec::<f64>::default();
        let ap = Aperture::<f64>::gaussian(1.0).unwrap();
        let a = qfi_point_sources(&ap, 1.3, Complex::new(0.6, 0.3), &spec).unwrap();
        let b = qfi_point_sources(&ap, 1.3, Complex::new(0.6, 0.0), &spec).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn corner_reports_divergence() {
        let spec = QuadratureSpec::<f64>::default();
        let ap = Aperture::<f64>::gaussian(1.0).unwrap();
        match qfi_point_sources(&ap, 0.0, Complex::new(-1.0, 0.0), &spec) {
            Err(Error::DivergentPerDetected { partial, .. }) => {
                assert!(partial.f_det_full.is_infinite());
                let zero = qfi_point_sources(&ap, 0.0, Complex::new(0.0, 0.0), &spec).unwrap();
                assert!((partial.f_em_full / zero.f_em_full - 2.0).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_width_has_small_vacuum_term() {
        let spec = QuadratureSpec::<f64>::default();
        let ap = Aperture::<f64>::gaussian(1.0).unwrap();
        let src = SourcePair::new(1.0, 1e-4, Complex::new(-0.5, 0.0), 0.01).unwrap();
        let f = qfi_finite_width(&ap, &src, Convention::Paper, &spec).unwrap();
        assert!(f.vacuum > 0.0 && f.vacuum < 1e-6 * f.photon);
        let point = qfi_point_sources(&ap, 1.0, src.coherence, &spec).unwrap();
        let em = f.photon / (src.emission_prob * src.width);
        assert!((em - point.f_em_full).abs() < 1e-6 * point.f_em_full);
    }
}
