use num_complex::Complex;

use super::matrix::{hermitian_eigen, SquareMatrix};
use super::reduce::{ReducedRepresentation, StatePart};
use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// QFI and symmetric logarithmic derivative from an eigendecomposition of `rho`.
#[derive(Debug, Clone)]
pub struct SpectralQfi<T> {
    pub qfi: T,
    pub sld: SquareMatrix<T>,
    /// `|drho - (L rho + rho L)/2| / |drho|` in Frobenius norm.
    pub residual: T,
}

/// Eigenvalue pairs whose sum falls below this are treated as outside the support.
const SUPPORT_CUTOFF: f64 = 1e-14;

pub fn qfi_spectral<T: Real>(rho: &SquareMatrix<T>, drho: &SquareMatrix<T>) -> Result<SpectralQfi<T>> {
    if rho.dim() != drho.dim() {
        return Err(Error::InvalidArgument(format!("rho is {0}x{0} but drho is {1}x{1}", rho.dim(), drho.dim())));
    }
    let n = rho.dim();
    let eig = hermitian_eigen(rho)?;
    let v = &eig.vectors;
    let d = v.adjoint().matmul(drho).matmul(v);
    let dnorm = drho.frobenius_norm();
    let zero = Complex::new(T::zero(), T::zero());
    let two = lit::<T>(2.0);

    let mut qfi = T::zero();
    let mut lam = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let sum = eig.values[i] + eig.values[j];
            if sum >= lit(SUPPORT_CUTOFF) {
                qfi += two * d[(i, j)].norm_sqr() / sum;
                lam[(i, j)] = d[(i, j)] * (two / sum);
            } else {
                if d[(i, j)].norm() > lit::<T>(1e-9) * dnorm {
                    return Err(Error::UnsupportedDerivative(d[(i, j)].norm().as_f64()));
                }
                lam[(i, j)] = zero;
            }
        }
    }
    let sld = v.matmul(&lam).matmul(&v.adjoint());
    let residual = sld_residual(rho, drho, &sld);
    Ok(SpectralQfi { qfi, sld, residual })
}

fn sld_residual<T: Real>(rho: &SquareMatrix<T>, drho: &SquareMatrix<T>, sld: &SquareMatrix<T>) -> T {
    let half = lit::<T>(0.5);
    let sym = sld.matmul(rho).add(&rho.matmul(sld)).scale(half);
    let dnorm = drho.frobenius_norm();
    let r = drho.sub(&sym).frobenius_norm();
    if dnorm > T::zero() {
        r / dnorm
    } else {
        r
    }
}

/// Closed-form SLD candidate `2 sum_i |dphi_i><dphi_i| / <phi_i|dphi_i>`, plus
/// `p3'/p3` on the vacuum axis, checked against the SLD equation.
#[derive(Debug, Clone)]
pub struct AnsatzCheck<T> {
    pub sld: SquareMatrix<T>,
    /// `Tr(rho L^2)` for the candidate.
    pub qfi: T,
    pub residual: T,
}

pub fn sld_ansatz<T: Real>(rep: &ReducedRepresentation<T>) -> Result<AnsatzCheck<T>> {
    if rep.part == StatePart::SinglePhoton {
        return Err(Error::InvalidArgument("the ansatz applies to the unnormalized photon vectors only".into()));
    }
    let n = rep.dim();
    let mut sld = SquareMatrix::zeros(n);
    for i in 0..2 {
        let a = &rep.branches[i];
        let ad = &rep.branch_derivatives[i];
        if ad.iter().all(|z| z.norm() == T::zero()) {
            continue;
        }
        let c: T = a.iter().zip(ad.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        if c == T::zero() {
            return Err(Error::InvalidArgument(format!("branch {i} has <phi|dphi> = 0")));
        }
        sld = sld.add(&SquareMatrix::outer(ad, ad).scale(lit::<T>(2.0) / c));
    }
    if rep.has_vacuum_axis() && rep.dp3 != T::zero() {
        sld[(n - 1, n - 1)] = Complex::new(rep.dp3 / rep.p3, T::zero());
    }
    let qfi = rep.rho.matmul(&sld).matmul(&sld).trace().re;
    let residual = sld_residual(&rep.rho, &rep.drho, &sld);
    Ok(AnsatzCheck { sld, qfi, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli() {
        let s = 0.25;
        let rho = SquareMatrix::<f64>::diagonal(&[s, 1.0 - s]);
        let drho = SquareMatrix::diagonal(&[1.0, -1.0]);
        let out = qfi_spectral(&rho, &drho).unwrap();
        assert!((out.qfi - 1.0 / (s * (1.0 - s))).abs() < 1e-12);
        assert!(out.residual < 1e-12);
    }

    #[test]
    fn pure_rotation_family() {
        for s in [0.0f64, 0.3, 1.2, 2.9] {
            let psi = [Complex::new(s.cos(), 0.0), Complex::new(s.sin(), 0.0)];
            let dpsi = [Complex::new(-s.sin(), 0.0), Complex::new(s.cos(), 0.0)];
            let rho = SquareMatrix::outer(&psi, &psi);
            let drho = SquareMatrix::outer(&dpsi, &psi).add(&SquareMatrix::outer(&psi, &dpsi));
            let out = qfi_spectral(&rho, &drho).unwrap();
            assert!((out.qfi - 4.0).abs() < 1e-10, "s = {s}: {}", out.qfi);
            assert!(out.residual < 1e-10);
        }
    }

    #[test]
    fn derivative_outside_support_is_rejected() {
        let rho = SquareMatrix::<f64>::diagonal(&[1.0, 0.0]);
        let drho = SquareMatrix::diagonal(&[0.0, 1.0]);
        assert!(matches!(qfi_spectral(&rho, &drho), Err(Error::UnsupportedDerivative(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let rho = SquareMatrix::<f64>::identity(2);
        let drho = SquareMatrix::zeros(3);
        assert!(qfi_spectral(&rho, &drho).is_err());
    }
}
