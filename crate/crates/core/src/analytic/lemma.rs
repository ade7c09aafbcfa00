use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{inner, ComplexProfile, QuadratureSpec};
use crate::real::{lit, Real};

/// A vector in the zero-or-one photon space: a field profile plus a vacuum amplitude.
#[derive(Debug, Clone)]
pub struct HilbertVector<T> {
    pub field: Option<ComplexProfile<T>>,
    pub vacuum: Complex<T>,
}

impl<T: Real> HilbertVector<T> {
    pub fn field(profile: ComplexProfile<T>) -> Self {
        Self { field: Some(profile), vacuum: Complex::new(T::zero(), T::zero()) }
    }

    pub fn vacuum(amplitude: Complex<T>) -> Self {
        Self { field: None, vacuum: amplitude }
    }

    pub fn inner(&self, other: &Self, spec: &QuadratureSpec<T>) -> Result<Complex<T>> {
        let photon = match (&self.field, &other.field) {
            (Some(a), Some(b)) => inner(a, b, spec)?,
            _ => Complex::new(T::zero(), T::zero()),
        };
        Ok(photon + self.vacuum.conj() * other.vacuum)
    }
}

/// A vector of an `s`-parameterized family together with its `s`-derivative.
#[derive(Debug, Clone)]
pub struct TangentVector<T> {
    pub value: HilbertVector<T>,
    pub derivative: HilbertVector<T>,
}

/// `4 sum_i B_ii <d phi_i|d phi_i>` for `rho = sum_ij B_ij |phi_i><phi_j|`.
///
/// The family must satisfy `<phi_i|phi_j> = <d phi_i|phi_j> = <d phi_i|d phi_j> = 0` for
/// `i != j` and `<d phi_i|phi_i>` real. Each relation is checked to `1e-8` relative to
/// the norms involved.
pub fn qfi_lemma_general<T: Real>(vectors: &[TangentVector<T>], weights: &[T], spec: &QuadratureSpec<T>) -> Result<T> {
    if vectors.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} vectors but {} weights",
            vectors.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
        return Err(Error::InvalidArgument(format!("weights must be non-negative, got {w}")));
    }
    let tol = lit::<T>(1e-8);
    let norms: Vec<(T, T)> = vectors
        .iter()
        .map(|v| {
            Ok((
                v.value.inner(&v.value, spec)?.re.max(T::zero()).sqrt(),
                v.derivative.inner(&v.derivative, spec)?.re.max(T::zero()).sqrt(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    for (i, vi) in vectors.iter().enumerate() {
        let c = vi.derivative.inner(&vi.value, spec)?;
        if c.im.abs() > tol * norms[i].0 * norms[i].1 {
            violations.push(format!("Im <d phi_{i}|phi_{i}> = {:e}", c.im.as_f64()));
        }
        for (j, vj) in vectors.iter().enumerate().skip(i + 1) {
            let checks = [
                ("<phi_i|phi_j>", vi.value.inner(&vj.value, spec)?, norms[i].0 * norms[j].0),
                ("<d phi_i|phi_j>", vi.derivative.inner(&vj.value, spec)?, norms[i].1 * norms[j].0),
                ("<phi_i|d phi_j>", vi.value.inner(&vj.derivative, spec)?, norms[i].0 * norms[j].1),
                ("<d phi_i|d phi_j>", vi.derivative.inner(&vj.derivative, spec)?, norms[i].1 * norms[j].1),
            ];
            for (name, value, scale) in checks {
                if value.norm() > tol * scale {
                    violations.push(format!("{name} with (i, j) = ({i}, {j}) is {:e}", value.norm().as_f64()));
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::AssumptionViolation(violations));
    }
    Ok(lit::<T>(4.0) * weights.iter().zip(&norms).map(|(&w, n)| w * n.1 * n.1).sum::<T>())
}

/// `4 (<d psi|d psi> - |<d psi|psi>|^2)` for a normalized pure-state family.
pub fn pure_state_qfi<T: Real>(psi: &ComplexProfile<T>, dpsi: &ComplexProfile<T>, spec: &QuadratureSpec<T>) -> Result<T> {
    let d = inner(dpsi, dpsi, spec)?.re;
    let c = inner(dpsi, psi, spec)?;
    Ok(lit::<T>(4.0) * (d - c.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_at(center: f64) -> ComplexProfile<f64> {
        let norm = (2.0 / std::f64::consts::PI).powf(0.25);
        ComplexProfile::real(1.0 + center.abs(), move |x| norm * (-(x - center).powi(2)).exp())
    }

    #[test]
    fn pure_family_with_stationary_phase() {
        // psi(x; s) = c exp(-(x - s)^2), normalized, real; <d psi|d psi> = 1
        let spec = QuadratureSpec::default();
        let s = 0.3;
        let psi = gaussian_at(s);
        let norm = (2.0 / std::f64::consts::PI).powf(0.25);
        let dpsi = ComplexProfile::real(1.3, move |x| norm * 2.0 * (x - s) * (-(x - s) * (x - s)).exp());
        let v = TangentVector { value: HilbertVector::field(psi.clone()), derivative: HilbertVector::field(dpsi.clone()) };
        let f = qfi_lemma_general(&[v], &[1.0], &spec).unwrap();
        assert!((f - 4.0).abs() < 1e-10);
        assert!((pure_state_qfi(&psi, &dpsi, &spec).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn frozen_orthogonal_vectors_carry_nothing() {
        let spec = QuadratureSpec::default();
        let zero = HilbertVector::field(ComplexProfile::zero());
        let vs = [
            TangentVector { value: HilbertVector::field(gaussian_at(-8.0)), derivative: zero.clone() },
            TangentVector { value: HilbertVector::field(gaussian_at(8.0)), derivative: zero },
        ];
        assert_eq!(qfi_lemma_general(&vs, &[0.5, 0.5], &spec).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_vectors_are_rejected() {
        let spec = QuadratureSpec::default();
        let zero = HilbertVector::field(ComplexProfile::zero());
        let vs = [
            TangentVector { value: HilbertVector::field(gaussian_at(-0.5)), derivative: zero.clone() },
            TangentVector { value: HilbertVector::field(gaussian_at(0.5)), derivative: zero },
        ];
        match qfi_lemma_general(&vs, &[0.5, 0.5], &spec) {
            Err(Error::AssumptionViolation(list)) => assert!(list[0].contains("<phi_i|phi_j>")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vacuum_component_is_orthogonal_to_fields() {
        let spec = QuadratureSpec::default();
        let a = HilbertVector::field(gaussian_at(0.0));
        let v = HilbertVector::vacuum(Complex::new(0.7, 0.0));
        assert_eq!(a.inner(&v, &spec).unwrap(), Complex::new(0.0, 0.0));
        assert!((v.inner(&v, &spec).unwrap().re - 0.49).abs() < 1e-15);
    }
}
