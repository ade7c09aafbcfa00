use num_complex::Complex;

use super::matrix::{hermitian_eigen, SquareMatrix};
use crate::error::{Error, Result};
use crate::numerics::{central_difference, inner_relaxed, ComplexProfile, QuadratureSpec};
use crate::real::{lit, Real};
use crate::state::TwoSourceState;

/// Which density operator to represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatePart {
    /// `rho_p` including the vacuum axis.
    Full,
    /// The unnormalized photon block of `rho_p`, vacuum axis dropped.
    PhotonBlock,
    /// The normalized single-photon part `rho_p^(1)`.
    SinglePhoton,
}

/// `rho` and `d rho / ds` in an orthonormal basis of
/// `span{psi~_0, psi~_pi, d psi~_0, d psi~_pi}` plus, for [`StatePart::Full`], the vacuum.
///
/// The vacuum axis, when present, is the last index.
#[derive(Debug, Clone)]
pub struct ReducedRepresentation<T> {
    pub basis: Vec<ComplexProfile<T>>,
    pub part: StatePart,
    pub rho: SquareMatrix<T>,
    pub drho: SquareMatrix<T>,
    /// Largest deviation of the basis Gram matrix from the identity, by quadrature.
    pub gram_residual: T,
    /// Rank of the photon block of `rho`.
    pub photon_rank: usize,
    /// Relative distance between `drho` and its finite-difference counterpart.
    pub fd_residual: Option<T>,
    /// Coordinates of `psi~_0`, `psi~_pi` and their derivatives, padded to the full dimension.
    pub branches: [Vec<Complex<T>>; 2],
    pub branch_derivatives: [Vec<Complex<T>>; 2],
    pub p3: T,
    pub dp3: T,
}

impl<T: Real> ReducedRepresentation<T> {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn has_vacuum_axis(&self) -> bool {
        self.part == StatePart::Full
    }
}

/// Default generator order: `psi~_0, psi~_pi, d psi~_0, d psi~_pi`.
pub const DEFAULT_ORDER: [usize; 4] = [0, 1, 2, 3];

/// Relative norm below which a Gram-Schmidt residual counts as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-12;

pub fn reduce<T: Real>(state: &TwoSourceState<T>, spec: &QuadratureSpec<T>, fd_step: T) -> Result<ReducedRepresentation<T>> {
    reduce_with_order(state, StatePart::Full, DEFAULT_ORDER, spec, Some(fd_step))
}

/// Builds the representation of `part`, orthonormalizing the generators in `order`.
/// `fd_step` enables the finite-difference cross-check of `drho`.
pub fn reduce_with_order<T: Real>(
    state: &TwoSourceState<T>,
    part: StatePart,
    order: [usize; 4],
    spec: &QuadratureSpec<T>,
    fd_step: Option<T>,
) -> Result<ReducedRepresentation<T>> {
    let mut sorted = order;
    sorted.sort_unstable();
    if sorted != DEFAULT_ORDER {
        return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..4")));
    }
    let generators = [
        state.psi0.amplitude().clone(),
        state.psi_pi.amplitude().clone(),
        state.psi0.derivative().clone(),
        state.psi_pi.derivative().clone(),
    ];
    let (basis_coeffs, coords) = gram_schmidt(&generators, order, spec)?;
    let basis: Vec<ComplexProfile<T>> = basis_coeffs.iter().map(|c| combine(&generators, c)).collect();
    let m = basis.len();

    let mut gram_residual = T::zero();
    for k in 0..m {
        for l in k..m {
            let g = noisy_inner(&basis[k], &basis[l], spec)?;
            let target = if k == l { T::one() } else { T::zero() };
            gram_residual = gram_residual.max((g - Complex::new(target, T::zero())).norm());
        }
    }

    let b = state.coeffs.entries;
    let a = [coords[0].clone(), coords[1].clone()];
    let adot = [coords[2].clone(), coords[3].clone()];
    let (rho_ph, drho_ph) = photon_block(&a, &adot, &b, m);
    let total = rho_ph.trace().re;
    if !(total > lit::<T>(1e-300)) {
        return Err(Error::RankCollapse(format!(
            "photon part of the state vanishes at s = {}, Re(gamma) = {}",
            state.source.separation, state.source.coherence.re
        )));
    }
    let photon_rank = {
        let e = hermitian_eigen(&rho_ph)?;
        e.values.iter().filter(|&&v| v > lit::<T>(1e-10) * total).count()
    };
    let (rho, drho, p3, dp3) = finish(&rho_ph, &drho_ph, part);

    let fd_residual = match fd_step {
        Some(h) => {
            let mut adot_fd = [Vec::new(), Vec::new()];
            for (i, st) in [&state.psi0, &state.psi_pi].iter().enumerate() {
                let fd = central_difference(|s| st.amplitude_at(s), state.source.separation, h)?;
                adot_fd[i] = basis.iter().map(|e| noisy_inner(e, &fd, spec)).collect::<Result<_>>()?;
            }
            let (_, drho_fd_ph) = photon_block(&a, &adot_fd, &b, m);
            let (_, drho_fd, _, _) = finish(&rho_ph, &drho_fd_ph, part);
            let scale = drho.frobenius_norm().max(T::epsilon() * rho.frobenius_norm());
            Some(drho_fd.sub(&drho).frobenius_norm() / scale)
        }
        None => None,
    };

    let dim = rho.dim();
    let pad = |v: &Vec<Complex<T>>| {
        let mut out = v.clone();
        out.resize(dim, Complex::new(T::zero(), T::zero()));
        out
    };
    let rep = ReducedRepresentation {
        basis,
        part,
        rho,
        drho,
        gram_residual,
        photon_rank,
        fd_residual,
        branches: [pad(&a[0]), pad(&a[1])],
        branch_derivatives: [pad(&adot[0]), pad(&adot[1])],
        p3,
        dp3,
    };
    validate(&rep)?;
    Ok(rep)
}

/// Loosest tolerance for inner products of orthonormalized profiles.
const NOISE_TOLERANCE_CAP: f64 = 1e-8;

fn noisy_inner<T: Real>(f: &ComplexProfile<T>, g: &ComplexProfile<T>, spec: &QuadratureSpec<T>) -> Result<Complex<T>> {
    inner_relaxed(f, g, spec, lit(NOISE_TOLERANCE_CAP))
}

fn combine<T: Real>(generators: &[ComplexProfile<T>; 4], coeffs: &[Complex<T>; 4]) -> ComplexProfile<T> {
    let terms: Vec<(Complex<T>, &ComplexProfile<T>)> = coeffs
        .iter()
        .zip(generators.iter())
        .filter(|(c, _)| c.norm() > T::zero())
        .map(|(c, g)| (*c, g))
        .collect();
    if terms.is_empty() {
        ComplexProfile::zero()
    } else {
        ComplexProfile::combine(&terms)
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass, carried out on the profiles
/// themselves so that nearly parallel generators keep their small residuals.
///
/// Returns the basis as coefficient vectors over the generators, and the coordinates of
/// every generator in that basis.
#[allow(clippy::type_complexity)]
fn gram_schmidt<T: Real>(
    generators: &[ComplexProfile<T>; 4],
    order: [usize; 4],
    spec: &QuadratureSpec<T>,
) -> Result<(Vec<[Complex<T>; 4]>, [Vec<Complex<T>>; 4])> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut basis: Vec<[Complex<T>; 4]> = Vec::new();
    let mut coords: [Vec<Complex<T>>; 4] = Default::default();
    for &j in &order {
        let norm_v = noisy_inner(&generators[j], &generators[j], spec)?.re;
        let mut coef = [zero; 4];
        coef[j] = Complex::new(T::one(), T::zero());
        let mut c = vec![zero; basis.len()];
        if norm_v > T::zero() {
            for _pass in 0..2 {
                for (k, e) in basis.iter().enumerate() {
                    let h = noisy_inner(&combine(generators, e), &combine(generators, &coef), spec)?;
                    for (x, y) in coef.iter_mut().zip(e.iter()) {
                        *x = *x - h * y;
                    }
                    c[k] = c[k] + h;
                }
            }
            let r = combine(generators, &coef);
            let res = noisy_inner(&r, &r, spec)?.re;
            if res > lit::<T>(RANK_TOLERANCE) * norm_v {
                let r = res.sqrt();
                basis.push(coef.map(|x| x / r));
                c.push(Complex::new(r, T::zero()));
            }
        }
        coords[j] = c;
    }
    let m = basis.len();
    for c in coords.iter_mut() {
        c.resize(m, zero);
    }
    Ok((basis, coords))
}

fn photon_block<T: Real>(
    a: &[Vec<Complex<T>>; 2],
    adot: &[Vec<Complex<T>>; 2],
    b: &[[T; 2]; 2],
    m: usize,
) -> (SquareMatrix<T>, SquareMatrix<T>) {
    let mut rho = SquareMatrix::zeros(m);
    let mut drho = SquareMatrix::zeros(m);
    for i in 0..2 {
        for j in 0..2 {
            if b[i][j] == T::zero() {
                continue;
            }
            rho = rho.add(&SquareMatrix::outer(&a[i], &a[j]).scale(b[i][j]));
            let d = SquareMatrix::outer(&adot[i], &a[j]).add(&SquareMatrix::outer(&a[i], &adot[j]));
            drho = drho.add(&d.scale(b[i][j]));
        }
    }
    (rho, drho)
}

fn finish<T: Real>(rho_ph: &SquareMatrix<T>, drho_ph: &SquareMatrix<T>, part: StatePart) -> (SquareMatrix<T>, SquareMatrix<T>, T, T) {
    let total = rho_ph.trace().re;
    let dtotal = drho_ph.trace().re;
    let m = rho_ph.dim();
    match part {
        StatePart::Full => {
            let mut rho = SquareMatrix::zeros(m + 1);
            let mut drho = SquareMatrix::zeros(m + 1);
            for i in 0..m {
                for j in 0..m {
                    rho[(i, j)] = rho_ph[(i, j)];
                    drho[(i, j)] = drho_ph[(i, j)];
                }
            }
            let p3 = T::one() - total;
            rho[(m, m)] = Complex::new(p3, T::zero());
            drho[(m, m)] = Complex::new(-dtotal, T::zero());
            (rho, drho, p3, -dtotal)
        }
        StatePart::PhotonBlock => (rho_ph.clone(), drho_ph.clone(), T::one() - total, -dtotal),
        StatePart::SinglePhoton => {
            let rho = rho_ph.scale(T::one() / total);
            let drho = drho_ph.scale(T::one() / total).sub(&rho_ph.scale(dtotal / (total * total)));
            (rho, drho, T::zero(), T::zero())
        }
    }
}

fn validate<T: Real>(rep: &ReducedRepresentation<T>) -> Result<()> {
    let tol = lit::<T>(1e-10);
    if rep.gram_residual > tol {
        return Err(Error::InvalidRepresentation(format!("basis Gram residual {:e}", rep.gram_residual.as_f64())));
    }
    let drho_norm = rep.drho.frobenius_norm();
    if rep.rho.hermitian_defect() > tol * rep.rho.frobenius_norm()
        || rep.drho.hermitian_defect() > tol * drho_norm.max(T::min_positive_value())
    {
        return Err(Error::InvalidRepresentation("rho or drho is not Hermitian".into()));
    }
    if rep.part != StatePart::PhotonBlock {
        let tr = rep.rho.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidRepresentation(format!("trace of rho is {}", tr.re)));
        }
        if rep.drho.trace().norm() > tol * drho_norm.max(T::one()) {
            return Err(Error::InvalidRepresentation("trace of drho is not zero".into()));
        }
    }
    let e = hermitian_eigen(&rep.rho)?;
    let top = e.values.last().copied().unwrap_or(T::zero());
    if e.values.first().copied().unwrap_or(T::zero()) < -lit::<T>(1e-12) * top {
        return Err(Error::InvalidRepresentation("rho is not positive semidefinite".into()));
    }
    if let Some(r) = rep.fd_residual {
        if !(r <= lit(1e-6)) {
            return Err(Error::InvalidRepresentation(format!(
                "finite-difference drho differs by {:e}",
                r.as_f64()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::qfi_finite_width;
    use crate::optics::{Aperture, Convention, SourcePair};
    use crate::oracle::{qfi_spectral, sld_ansatz};
    use crate::state::assemble_state;

    fn state(s: f64, gamma: Complex<f64>) -> TwoSourceState<f64> {
        let ap = Aperture::gaussian(1.0).unwrap();
        let src = SourcePair::new(s, 1e-4, gamma, 0.01).unwrap();
        assemble_state(&ap, &src, &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn ranks() {
        let spec = QuadratureSpec::default();
        let coherent = reduce(&state(1.0, Complex::new(1.0, 0.0)), &spec, 1e-3).unwrap();
        assert_eq!(coherent.photon_rank, 1);
        let incoherent = reduce(&state(1.0, Complex::new(0.0, 0.0)), &spec, 1e-3).unwrap();
        assert_eq!(incoherent.photon_rank, 2);
        assert_eq!(incoherent.dim(), 5);
        assert!(incoherent.gram_residual < 1e-10);
        assert!(incoherent.fd_residual.unwrap() < 1e-6);
    }

    #[test]
    fn matches_lemma_path() {
        let spec = QuadratureSpec::default();
        let ap = Aperture::<f64>::gaussian(1.0).unwrap();
        let src = SourcePair::new(1.0, 1e-4, Complex::new(-0.5, 0.0), 0.01).unwrap();
        let st = assemble_state(&ap, &src, &spec).unwrap();
        let rep = reduce(&st, &spec, 1e-3).unwrap();
        let f = qfi_spectral(&rep.rho, &rep.drho).unwrap();
        let lemma = qfi_finite_width(&ap, &src, Convention::Paper, &spec).unwrap();
        assert!((f.qfi / lemma.total - 1.0).abs() < 1e-7, "{} vs {}", f.qfi, lemma.total);
        assert!(f.residual < 1e-9);
    }

    #[test]
    fn ordering_does_not_matter() {
        let spec = QuadratureSpec::default();
        let st = state(0.5, Complex::new(0.3, 0.2));
        let a = reduce_with_order(&st, StatePart::Full, DEFAULT_ORDER, &spec, None).unwrap();
        let b = reduce_with_order(&st, StatePart::Full, [3, 1, 2, 0], &spec, None).unwrap();
        let fa = qfi_spectral(&a.rho, &a.drho).unwrap().qfi;
        let fb = qfi_spectral(&b.rho, &b.drho).unwrap().qfi;
        assert!((fa / fb - 1.0).abs() < 1e-10);
        assert!(reduce_with_order(&st, StatePart::Full, [0, 0, 1, 2], &spec, None).is_err());
    }

    #[test]
    fn vacuum_axis_contributes_vacuum_term() {
        let spec = QuadratureSpec::default();
        let st = state(2.0, Complex::new(0.5, 0.0));
        let full = reduce_with_order(&st, StatePart::Full, DEFAULT_ORDER, &spec, None).unwrap();
        let block = reduce_with_order(&st, StatePart::PhotonBlock, DEFAULT_ORDER, &spec, None).unwrap();
        let ff = qfi_spectral(&full.rho, &full.drho).unwrap().qfi;
        let fb = qfi_spectral(&block.rho, &block.drho).unwrap().qfi;
        let vac = full.dp3 * full.dp3 / full.p3;
        assert!(vac > 0.0);
        assert!((ff - fb - vac).abs() < 1e-9 * ff, "{ff} {fb} {vac}");
    }

    #[test]
    fn ansatz_solves_sld_equation() {
        let spec = QuadratureSpec::default();
        for g in [-0.98, 0.0, 0.7] {
            let rep = reduce(&state(0.8, Complex::new(g, 0.0)), &spec, 1e-3).unwrap();
            let a = sld_ansatz(&rep).unwrap();
            let f = qfi_spectral(&rep.rho, &rep.drho).unwrap();
            assert!(a.residual < 1e-9, "residual {}", a.residual);
            assert!((a.qfi / f.qfi - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_photon_part_is_normalized() {
        let spec = QuadratureSpec::default();
        let st = state(0.1, Complex::new(-0.98, 0.0));
        let rep = reduce_with_order(&st, StatePart::SinglePhoton, DEFAULT_ORDER, &spec, Some(1e-3)).unwrap();
        assert!((rep.rho.trace().re - 1.0).abs() < 1e-12);
        let lemma = qfi_finite_width(st.psi0.aperture(), &st.source, Convention::Paper, &spec).unwrap();
        let f = qfi_spectral(&rep.rho, &rep.drho).unwrap().qfi;
        assert!((f / lemma.single_photon - 1.0).abs() < 1e-7, "{f} vs {}", lemma.single_photon);
    }
}
